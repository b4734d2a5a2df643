// Copyright 2026 The pcdf-serving Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// pcdf: command-line driver for latency sweeps, equivalence checks and
// pre-model calibration.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pcdf/bench.hpp"
#include "pcdf/config.hpp"
#include "pcdf/report.hpp"

namespace {

using pcdf::bench::LatencyReport;
using pcdf::config::ExperimentConfig;

struct CommonOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> requests;
};

ExperimentConfig load_config(const CommonOptions& opts) {
    ExperimentConfig cfg = opts.config_path.empty() ? ExperimentConfig{} : pcdf::config::load(opts.config_path);
    if (opts.seed) {
        cfg.workload.seed = *opts.seed;
    }
    if (const char* env = std::getenv("PCDF_SEED"); env != nullptr && *env != '\0') {
        cfg.workload.seed = std::stoull(env, nullptr, 0);
    }
    if (opts.requests) {
        cfg.workload.num_requests = *opts.requests;
    }
    cfg.pipeline.validate();
    cfg.workload.validate();
    return cfg;
}

double ms(double ns) { return ns / 1e6; }

void print_report(const LatencyReport& report) {
    std::printf("%-9s %7s %6s %5s %10s %10s %10s %10s %s\n", "mode", "seq_len", "count", "fail", "e2e_p50",
                "e2e_p99", "rank_p50", "rank_p99", "budget");
    for (const auto& c : report.cells) {
        std::printf("%-9s %7zu %6zu %5zu %8.2fms %8.2fms %8.2fms %8.2fms %s\n",
                    std::string(pcdf::pipeline::to_string(c.mode)).c_str(), c.seq_len, c.count, c.failures,
                    ms(static_cast<double>(c.end_to_end.p50)), ms(static_cast<double>(c.end_to_end.p99)),
                    ms(static_cast<double>(c.rank_stage.p50)), ms(static_cast<double>(c.rank_stage.p99)),
                    c.within_budget ? "ok" : "OVER");
    }
}

pcdf::report::Format format_for(const std::string& format, const std::string& out) {
    if (!format.empty()) {
        return pcdf::report::parse_format(format);
    }
    return out.ends_with(".csv") ? pcdf::report::Format::Csv : pcdf::report::Format::Json;
}

std::vector<std::string> split_commas(const std::string& s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto comma = s.find(',', start);
        out.push_back(s.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
        if (comma == std::string::npos) {
            break;
        }
        start = comma + 1;
    }
    return out;
}

void add_common(CLI::App* cmd, CommonOptions& opts, bool with_requests) {
    cmd->add_option("--config", opts.config_path, "Key/value config file")->check(CLI::ExistingFile);
    cmd->add_option("--seed", opts.seed, "Workload seed (PCDF_SEED overrides)");
    if (with_requests) {
        cmd->add_option("--requests", opts.requests, "Requests per cell");
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"PCDF ranking pipeline: latency sweeps, equivalence checks, calibration"};
    app.require_subcommand(1);

    CommonOptions run_opts;
    std::string run_mode = "pcdf";
    std::size_t run_seq_len = 1024;
    std::string run_out;
    std::string run_format;
    auto* run = app.add_subcommand("run", "Serve one workload in one mode");
    add_common(run, run_opts, true);
    run->add_option("--mode", run_mode, "baseline or pcdf")->check(CLI::IsMember({"baseline", "pcdf"}));
    run->add_option("--seq-len", run_seq_len, "Long behavior sequence length");
    run->add_option("--out", run_out, "Report path");
    run->add_option("--format", run_format, "json or csv")->check(CLI::IsMember({"json", "csv"}));

    CommonOptions sweep_opts;
    std::string sweep_lens;
    std::string sweep_modes = "baseline,pcdf";
    std::string sweep_out;
    std::string sweep_format;
    auto* sweep = app.add_subcommand("sweep", "Sweep sequence lengths across modes");
    add_common(sweep, sweep_opts, true);
    sweep->add_option("--seq-lens", sweep_lens, "Comma-separated lengths (default from config)");
    sweep->add_option("--modes", sweep_modes, "Comma-separated modes");
    sweep->add_option("--out", sweep_out, "Report path");
    sweep->add_option("--format", sweep_format, "json or csv (default by extension)")
        ->check(CLI::IsMember({"json", "csv"}));

    CommonOptions verify_opts;
    verify_opts.requests = 1000;
    auto* verify = app.add_subcommand("verify", "Check bit-identical rankings across serving paths");
    add_common(verify, verify_opts, true);

    CommonOptions calib_opts;
    std::size_t calib_reps = 9;
    auto* calibrate = app.add_subcommand("calibrate", "Time pre_forward per sequence length against the cover");
    add_common(calibrate, calib_opts, false);
    calibrate->add_option("--reps", calib_reps, "Timing repetitions per length");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            auto cfg = load_config(run_opts);
            cfg.pipeline.mode = pcdf::config::parse_mode(run_mode);
            cfg.workload.seq_lens = {run_seq_len};
            cfg.workload.validate();
            const auto report = pcdf::bench::run_experiment(cfg.pipeline, cfg.workload);
            print_report(report);
            if (!run_out.empty()) {
                pcdf::report::emit_report(report, format_for(run_format, run_out), run_out);
            }
            return 0;
        }
        if (sweep->parsed()) {
            auto cfg = load_config(sweep_opts);
            if (!sweep_lens.empty()) {
                cfg.workload.seq_lens.clear();
                for (const auto& s : split_commas(sweep_lens)) {
                    cfg.workload.seq_lens.push_back(static_cast<std::size_t>(std::stoull(s)));
                }
            }
            cfg.workload.validate();
            std::vector<pcdf::pipeline::Mode> modes;
            for (const auto& m : split_commas(sweep_modes)) {
                modes.push_back(pcdf::config::parse_mode(m));
            }
            const auto report = pcdf::bench::run_sweep(cfg.pipeline, cfg.workload, modes);
            print_report(report);
            if (!sweep_out.empty()) {
                pcdf::report::emit_report(report, format_for(sweep_format, sweep_out), sweep_out);
            }
            return 0;
        }
        if (verify->parsed()) {
            const auto cfg = load_config(verify_opts);
            const auto result = pcdf::bench::verify_equivalence(cfg.pipeline, cfg.workload);
            if (result.passed) {
                std::printf("verify: PASS (%zu requests; monolithic, baseline, pcdf x k={1,4})\n",
                            result.requests_checked);
                return 0;
            }
            const auto& d = *result.divergence;
            std::printf("verify: FAIL at request %llu (seq_len %zu) on path '%s'\n",
                        static_cast<unsigned long long>(d.request_id), d.seq_len, d.path.c_str());
            if (d.item_id) {
                std::printf("  item_id: %llu\n", static_cast<unsigned long long>(*d.item_id));
            }
            std::printf("  %s\n", d.detail.c_str());
            std::printf("  reproduce: seed=%llu user_id=%llu context_id=%llu long=%zu short=%zu\n",
                        static_cast<unsigned long long>(cfg.workload.seed),
                        static_cast<unsigned long long>(d.request.user_id),
                        static_cast<unsigned long long>(d.request.context_id), d.request.long_behaviors.size(),
                        d.request.short_behaviors.size());
            return 1;
        }
        if (calibrate->parsed()) {
            const auto cfg = load_config(calib_opts);
            const auto points = pcdf::bench::calibrate(cfg.pipeline, cfg.workload, calib_reps);
            std::printf("%7s %12s %12s %12s %s\n", "seq_len", "pre_forward", "required", "cover", "status");
            bool all_covered = true;
            for (const auto& p : points) {
                std::printf("%7zu %10.3fms %10.3fms %10.3fms %s\n", p.seq_len,
                            ms(static_cast<double>(p.pre_forward_p50)), ms(static_cast<double>(p.required_ns)),
                            ms(static_cast<double>(p.cover_ns)), p.covered ? "covered" : "NOT COVERED");
                all_covered = all_covered && p.covered;
            }
            if (!all_covered) {
                std::fprintf(stderr,
                             "warning: pre-model exceeds the retrieval + pre-rank cover at some lengths; "
                             "PCDF rank-stage latency will grow with sequence length there\n");
            }
            return 0;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "pcdf: %s\n", e.what());
        return 2;
    }
    return 0;
}
