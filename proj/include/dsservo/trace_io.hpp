#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "dsservo/errors.hpp"
#include "dsservo/servo.hpp"

namespace dsservo::cli {

/// Fixed CSV schema:
/// k,t,r,y,y_vcm,y_ma,e,u_acc,d,d_hat,ff,lambda,trace_P,theta_1..theta_{n+m}
/// Floating values carry 17 significant digits so a reread reconstructs the
/// trace bit-exactly.
inline void write_trace_csv(const servo::SimulationTrace& trace, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);

    out << "k,t,r,y,y_vcm,y_ma,e,u_acc,d,d_hat,ff,lambda,trace_P";
    for (int i = 1; i <= trace.theta_dim; ++i) out << ",theta_" << i;
    out << '\n';

    char buf[40];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        out << ',' << buf;
    };
    for (const auto& rec : trace.records) {
        out << rec.k;
        put(rec.t);
        put(rec.r);
        put(rec.y);
        put(rec.y_vcm);
        put(rec.y_ma);
        put(rec.e);
        put(rec.u_acc);
        put(rec.d);
        put(rec.d_hat);
        put(rec.ff);
        put(rec.lambda);
        put(rec.trace_p);
        for (double th : rec.theta) put(th);
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

inline servo::SimulationTrace read_trace_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path);

    servo::SimulationTrace trace;
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty trace file: " + path);

    int columns = 0;
    for (std::istringstream hs(line); std::getline(hs, line, ','); ) ++columns;
    trace.theta_dim = columns - 13;
    if (trace.theta_dim < 0) throw IoError("malformed trace header: " + path);

    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string cell;
        std::vector<double> vals;
        vals.reserve(static_cast<std::size_t>(columns));
        while (std::getline(ls, cell, ',')) vals.push_back(std::strtod(cell.c_str(), nullptr));
        if (vals.size() != static_cast<std::size_t>(columns))
            throw IoError("malformed trace row: " + path);
        servo::TraceRecord rec;
        rec.k = static_cast<std::size_t>(vals[0]);
        rec.t = vals[1];
        rec.r = vals[2];
        rec.y = vals[3];
        rec.y_vcm = vals[4];
        rec.y_ma = vals[5];
        rec.e = vals[6];
        rec.u_acc = vals[7];
        rec.d = vals[8];
        rec.d_hat = vals[9];
        rec.ff = vals[10];
        rec.lambda = vals[11];
        rec.trace_p = vals[12];
        rec.theta.assign(vals.begin() + 13, vals.end());
        trace.records.push_back(std::move(rec));
    }
    if (trace.records.size() >= 2)
        trace.ts = trace.records[1].t - trace.records[0].t;
    return trace;
}

}  // namespace dsservo::cli
