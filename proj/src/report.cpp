#include "loglearn/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

#include "loglearn/errors.hpp"

namespace loglearn {

MetricRow::MetricRow() {
    ari = ami = v = accuracy = roc_auc = pr_auc = std::numeric_limits<double>::quiet_NaN();
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

std::string field(double v) { return std::isnan(v) ? "" : format_double(v); }

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("report: cannot write " + path);
    return out;
}

}  // namespace

void write_report(const MetricsReport& report, const std::string& dir) {
    std::filesystem::create_directories(dir);

    auto rows = open_out(dir + "/report.csv");
    rows << "run_id,config_hash,seed,split,target,algorithm,mode,ari,ami,v_measure,accuracy,"
            "roc_auc,pr_auc\n";
    for (const auto& r : report.rows)
        rows << report.run_id << "," << report.config_hash << "," << report.seed << "," << r.split
             << "," << r.target << "," << r.algorithm << "," << r.mode << "," << field(r.ari)
             << "," << field(r.ami) << "," << field(r.v) << "," << field(r.accuracy) << ","
             << field(r.roc_auc) << "," << field(r.pr_auc) << "\n";

    // component columns are discovered across epochs so the header is stable
    std::vector<std::string> names;
    for (const auto& e : report.epochs)
        for (const auto& c : e.components)
            if (std::find(names.begin(), names.end(), c.name) == names.end())
                names.push_back(c.name);
    auto epochs = open_out(dir + "/epochs.csv");
    epochs << "epoch,lr,total";
    for (const auto& n : names) epochs << "," << n;
    epochs << "\n";
    for (const auto& e : report.epochs) {
        epochs << e.epoch << "," << format_double(e.lr) << "," << format_double(e.total);
        for (const auto& n : names) {
            double v = std::numeric_limits<double>::quiet_NaN();
            for (const auto& c : e.components)
                if (c.name == n) v = c.value;
            epochs << "," << field(v);
        }
        epochs << "\n";
    }

    auto summary = open_out(dir + "/summary.txt");
    summary << "run: " << report.run_id << "\n";
    summary << "config hash: " << report.config_hash << "\n";
    summary << "seed: " << report.seed << "\n";
    summary << "objective: " << report.objective << "\n";
    if (!report.method.empty()) summary << "transfer method: " << report.method << "\n";
    if (!report.checkpoint_path.empty())
        summary << "checkpoint: " << report.checkpoint_path << "\n";
    summary << "epochs completed: " << report.epochs.size() << "\n";
    if (report.aborted) summary << "ABORTED: " << report.abort_reason << "\n";
    if (!report.epochs.empty())
        summary << "final loss: " << format_double(report.epochs.back().total) << "\n";
    for (const auto& r : report.rows) {
        summary << r.split << " " << r.target << " " << r.algorithm << " (" << r.mode << "):";
        if (!std::isnan(r.ari)) summary << " ARI=" << format_double(r.ari);
        if (!std::isnan(r.ami)) summary << " AMI=" << format_double(r.ami);
        if (!std::isnan(r.v)) summary << " V=" << format_double(r.v);
        if (!std::isnan(r.accuracy)) summary << " acc=" << format_double(r.accuracy);
        if (!std::isnan(r.roc_auc)) summary << " roc_auc=" << format_double(r.roc_auc);
        if (!std::isnan(r.pr_auc)) summary << " pr_auc=" << format_double(r.pr_auc);
        summary << "\n";
    }

    auto timing = open_out(dir + "/timing.txt");
    timing << "wall_clock_seconds: " << format_double(report.wall_clock_seconds) << "\n";
}

void append_summary_csv(const std::string& path, const std::vector<MetricsReport>& children,
                        const std::vector<std::string>& axis_keys,
                        const std::vector<std::vector<std::string>>& axis_values) {
    auto out = open_out(path);
    out << "grid_index,seed,config_hash";
    for (const auto& k : axis_keys) out << "," << k;
    out << ",split,target,algorithm,mode,ari,ami,v_measure\n";
    for (size_t i = 0; i < children.size(); ++i) {
        const MetricsReport& rep = children[i];
        for (const auto& r : rep.rows) {
            if (r.algorithm == "pair_scores") continue;
            out << i << "," << rep.seed << "," << rep.config_hash;
            for (const auto& v : axis_values[i]) out << "," << v;
            out << "," << r.split << "," << r.target << "," << r.algorithm << "," << r.mode << ","
                << field(r.ari) << "," << field(r.ami) << "," << field(r.v) << "\n";
        }
    }
}

}  // namespace loglearn
