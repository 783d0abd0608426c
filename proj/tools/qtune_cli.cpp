/*
 *   Licensed under the Apache License, Version 2.0 (the "License");
 *   you may not use this file except in compliance with the License.
 *   You may obtain a copy of the License at
 *
 *       http://www.apache.org/licenses/LICENSE-2.0
 *
 *   Unless required by applicable law or agreed to in writing, software
 *   distributed under the License is distributed on an "AS IS" BASIS,
 *   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 *   See the License for the specific language governing permissions and
 *   limitations under the License.
 */
#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qtune/experiment.hpp"
#include "qtune/gamma.hpp"
#include "qtune/kv_config.hpp"
#include "qtune/learner/model.hpp"
#include "qtune/quorum_sim.hpp"
#include "qtune/sla.hpp"
#include "qtune/trace_log.hpp"
#include "qtune/workload.hpp"

namespace fs = std::filesystem;
using namespace qtune;

namespace {

struct Common {
    std::uint64_t seed = 1;
    std::string out;
    std::string sla;
    std::string config;
    std::string workload;
    std::optional<double> window_ms;
    double percentile = 95.0;
    std::string learner = "tree";

    // Workload field overrides.
    std::optional<double> rw;
    std::optional<int> threads;
    std::optional<std::uint32_t> keys;
    std::optional<std::string> key_dist;
    std::optional<double> zipf_theta;
    std::optional<std::uint64_t> ops_per_thread;

    std::optional<double> inject_delay_ms;
};

void add_common(CLI::App& cmd, Common& c, bool simulation)
{
    cmd.add_option("--seed", c.seed, "Master random seed");
    cmd.add_option("--out", c.out, "Output file")->required();
    cmd.add_option("--percentile", c.percentile, "Percentile for the per-key staleness score")
        ->check(CLI::Range(0.0, 100.0));
    if (simulation) {
        cmd.add_option("--config", c.config, "Cluster key=value file");
        cmd.add_option("--workload", c.workload, "Workload key=value file");
        cmd.add_option("--window-ms", c.window_ms, "Observation window length (ms)");
        cmd.add_option("--rw", c.rw, "Read proportion");
        cmd.add_option("--threads", c.threads, "Client sessions (Tc)");
        cmd.add_option("--keys", c.keys, "Key count");
        cmd.add_option("--key-dist", c.key_dist, "uniform | zipfian");
        cmd.add_option("--zipf-theta", c.zipf_theta, "Zipfian skew");
        cmd.add_option("--ops-per-thread", c.ops_per_thread, "Operation cap per session");
        cmd.add_option("--inject-delay-ms", c.inject_delay_ms, "Constant delay added to every message");
    }
}

ClusterConfig cluster_of(const Common& c)
{
    auto cluster = c.config.empty() ? ClusterConfig{} : ClusterConfig::from_config(KeyValueConfig::load(c.config));
    if (c.inject_delay_ms) {
        cluster.latency.injected_delay_us = static_cast<std::int64_t>(*c.inject_delay_ms * 1000.0);
    }
    cluster.validate();
    return cluster;
}

WorkloadSpec workload_of(const Common& c)
{
    auto spec = c.workload.empty() ? WorkloadSpec{} : WorkloadSpec::from_config(KeyValueConfig::load(c.workload));
    if (c.rw) spec.read_proportion = *c.rw;
    if (c.threads) spec.thread_count = *c.threads;
    if (c.keys) spec.key_count = *c.keys;
    if (c.key_dist) {
        if (*c.key_dist == "uniform") {
            spec.key_distribution = KeyDistribution::Uniform;
        } else if (*c.key_dist == "zipfian") {
            spec.key_distribution = KeyDistribution::Zipfian;
        } else {
            throw std::invalid_argument("unknown key distribution '" + *c.key_dist + "'");
        }
    }
    if (c.zipf_theta) spec.zipf_theta = *c.zipf_theta;
    if (c.ops_per_thread) spec.ops_per_thread_per_window = *c.ops_per_thread;
    spec.seed = c.seed;
    spec.validate();
    return spec;
}

std::int64_t window_us(const Common& c, std::int64_t fallback)
{
    if (!c.window_ms) {
        return fallback;
    }
    if (*c.window_ms <= 0.0) {
        throw std::invalid_argument("--window-ms must be positive");
    }
    return static_cast<std::int64_t>(*c.window_ms * 1000.0);
}

// An existing file is read as an SLA file, anything else as an inline subSLA.
SLA sla_of(const std::string& text)
{
    if (text.empty()) {
        throw std::invalid_argument("--sla is required");
    }
    if (fs::is_regular_file(text)) {
        return parse_sla(fs::path(text));
    }
    return {parse_subsla(text)};
}

std::ofstream open_out(const std::string& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path);
    }
    return out;
}

template <typename T>
std::vector<T> parse_list(const std::string& text)
{
    std::vector<T> values;
    for (const double v : parse_double_list(text)) {
        values.push_back(static_cast<T>(v));
    }
    if (values.empty()) {
        throw std::invalid_argument("empty list '" + text + "'");
    }
    return values;
}

std::string model_path_for(const std::string& out, std::size_t index, std::size_t count)
{
    return count == 1 ? out : fmt::format("{}.{}", out, index);
}

LearnerOptions learner_options(std::uint64_t seed, double rw_step, int p_buckets, int trees)
{
    LearnerOptions options;
    options.cells.rw_step = rw_step;
    options.cells.p_buckets = p_buckets;
    options.tree.shuffle_seed = seed;
    options.forest.seed = seed;
    options.forest.tree_count = trees;
    options.forest.tree.shuffle_seed = seed;
    options.logistic.rw_step = rw_step;
    return options;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Simulates a quorum-replicated store and learns SLA-aware consistency levels"};
    app.require_subcommand(1);

    // corpus
    Common corpus_opts;
    std::string corpus_rw = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0";
    std::string corpus_tc = "4,8";
    int corpus_reps = 25;
    auto* corpus = app.add_subcommand("corpus", "Generate a training dataset over a workload grid");
    add_common(*corpus, corpus_opts, true);
    corpus->add_option("--rw-values", corpus_rw, "Comma-separated read proportions");
    corpus->add_option("--tc-values", corpus_tc, "Comma-separated session counts");
    corpus->add_option("--reps", corpus_reps, "Repetitions per grid point")->check(CLI::PositiveNumber);

    // simulate
    Common sim_opts;
    std::string sim_level = "ONE/ANY";
    auto* simulate = app.add_subcommand("simulate", "Run one window at a fixed level and write its trace");
    add_common(*simulate, sim_opts, true);
    simulate->add_option("--level", sim_level, "Consistency level, e.g. QUORUM/ALL");

    // train
    Common train_opts;
    std::string train_data;
    std::string train_metrics;
    int train_folds = 10;
    double rw_step = 0.05;
    int p_buckets = 0;
    int forest_trees = 100;
    std::string bic_form = "double";
    int overhead_predictions = 10000;
    auto* train = app.add_subcommand("train", "Label a dataset against an SLA and fit a model per subSLA");
    add_common(*train, train_opts, false);
    train->add_option("--data", train_data, "Dataset file")->required();
    train->add_option("--sla", train_opts.sla, "SLA file or inline \"latency_ms staleness_ms\"")->required();
    train->add_option("--learner", train_opts.learner, "tree | forest | logistic");
    train->add_option("--metrics", train_metrics, "Write CV error and information criteria here");
    train->add_option("--folds", train_folds, "Cross-validation folds")->check(CLI::Range(2, 1000000));
    train->add_option("--rw-step", rw_step, "Read-proportion cell width for labelling");
    train->add_option("--p-buckets", p_buckets, "Packet-count quantile buckets per cell (0 = off)");
    train->add_option("--trees", forest_trees, "Forest size")->check(CLI::PositiveNumber);
    train->add_option("--bic-form", bic_form, "double (2k ln N) | standard (k ln N)");
    train->add_option("--overhead-predictions", overhead_predictions,
                      "Timed predictions reported on stdout (0 = skip)");

    // evaluate
    Common eval_opts;
    std::string eval_model;
    std::string eval_summary;
    std::string eval_rw = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0";
    int eval_windows = 5;
    auto* evaluate = app.add_subcommand("evaluate", "Compare the model's levels with every fixed level");
    add_common(*evaluate, eval_opts, true);
    evaluate->add_option("--model", eval_model, "Model file written by train")->required();
    evaluate->add_option("--sla", eval_opts.sla, "SLA file or inline subSLA (defaults to the model's)");
    evaluate->add_option("--summary", eval_summary, "Write per-policy M statistics here");
    evaluate->add_option("--rw-values", eval_rw, "Comma-separated read proportions");
    evaluate->add_option("--windows", eval_windows, "Scored windows per read proportion")
        ->check(CLI::PositiveNumber);

    // sweep
    Common sweep_opts;
    std::string sweep_rw = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0";
    std::string sweep_tc = "8";
    int sweep_reps = 1;
    auto* sweep = app.add_subcommand("sweep", "Fixed-level latency/staleness table over read proportions");
    add_common(*sweep, sweep_opts, true);
    sweep->add_option("--sla", sweep_opts.sla, "Optional SLA file or inline subSLA to mark satisfaction");
    sweep->add_option("--rw-values", sweep_rw, "Comma-separated read proportions");
    sweep->add_option("--tc-values", sweep_tc, "Comma-separated session counts");
    sweep->add_option("--reps", sweep_reps, "Repetitions per point")->check(CLI::PositiveNumber);

    // gamma
    Common gamma_opts;
    std::string gamma_trace;
    auto* gamma = app.add_subcommand("gamma", "Per-key staleness of a trace file");
    add_common(*gamma, gamma_opts, false);
    gamma->add_option("--trace", gamma_trace, "Trace file")->required();

    // perf-table
    Common perf_opts;
    std::string perf_metrics;
    PerfConfig perf_config;
    auto* perf_table = app.add_subcommand("perf-table", "Accuracy/speed trade-off scores");
    add_common(*perf_table, perf_opts, false);
    perf_table->add_option("--metrics", perf_metrics, "CSV with name,overhead_ms,cv_error")->required();
    perf_table->add_option("--o-base", perf_config.o_base, "Baseline overhead (ms)");
    perf_table->add_option("--e-base", perf_config.e_base, "Baseline error");
    perf_table->add_option("--w-speedup", perf_config.w_speedup, "Speed-up weight");
    perf_table->add_option("--w-accuracy", perf_config.w_accuracy, "Accuracy weight");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*corpus) {
            CorpusGrid grid;
            grid.rw_values = parse_list<double>(corpus_rw);
            grid.tc_values = parse_list<int>(corpus_tc);
            grid.repetitions = corpus_reps;
            grid.window_us = window_us(corpus_opts, grid.window_us);
            grid.percentile = corpus_opts.percentile;
            const auto rows =
                generate_corpus(cluster_of(corpus_opts), workload_of(corpus_opts), grid, corpus_opts.seed);
            auto out = open_out(corpus_opts.out);
            write_dataset(out, rows);
            fmt::print("{} rows written to {}\n", rows.size(), corpus_opts.out);
        } else if (*simulate) {
            auto config = cluster_of(sim_opts);
            config.seed = mix_seed(sim_opts.seed, 0);
            Cluster cluster(config);
            WorkloadStream stream(workload_of(sim_opts));
            const auto trace = cluster.run_window(stream, fixed_level(parse_level(sim_level)),
                                                  window_us(sim_opts, 10'000'000));
            auto out = open_out(sim_opts.out);
            write_trace(out, trace);
            fmt::print("{} operations written to {}\n", trace.size(), sim_opts.out);
        } else if (*train) {
            const auto rows = load_dataset(fs::path(train_data));
            if (rows.empty()) {
                throw std::invalid_argument("dataset " + train_data + " has no rows");
            }
            const auto sla = sla_of(train_opts.sla);
            const auto kind = parse_learner(train_opts.learner);
            const auto form = bic_form == "standard" ? BicForm::Standard
                              : bic_form == "double" ? BicForm::DoublePenalty
                                                     : throw std::invalid_argument("unknown --bic-form " + bic_form);
            const auto options = learner_options(train_opts.seed, rw_step, p_buckets, forest_trees);

            std::ostringstream metrics;
            metrics << "learner,latency_ms,staleness_ms,rows,folds,cv_error,k,log_likelihood,aicc,bic\n";
            for (std::size_t i = 0; i < sla.size(); ++i) {
                const auto predictor = train_predictor(kind, rows, sla[i], options);
                auto out = open_out(model_path_for(train_opts.out, i, sla.size()));
                save_model(out, predictor);

                if (!train_metrics.empty()) {
                    const auto labelled = label_dataset(rows, sla[i], options.cells);
                    const auto cv = cross_validate(rows, sla[i], train_folds, kind, options);
                    const auto [k, logl] = model_likelihood(predictor, rows, labelled);
                    const auto n = static_cast<double>(rows.size());
                    const double a = n > k + 1 ? aicc(k, n, logl) : std::nan("");
                    fmt::print(metrics, "{},{},{},{},{},{:.6f},{},{:.6f},{:.6f},{:.6f}\n", to_string(kind),
                               sla[i].latency_threshold_ms, sla[i].staleness_threshold_ms, rows.size(),
                               train_folds, cv.error, k, logl, a, bic(k, n, logl, form));
                }
                if (overhead_predictions > 0) {
                    std::vector<Features> queries;
                    for (const auto& r : rows) {
                        queries.push_back(features_of(r));
                    }
                    const auto stats = measure_overhead(predictor, queries, overhead_predictions);
                    fmt::print("subSLA {}: prediction mean {:.6f} ms, variance {:.3g}, stddev {:.3g}\n",
                               to_string(sla[i]), stats.mean_ms, stats.variance, stats.stddev);
                }
            }
            if (!train_metrics.empty()) {
                auto out = open_out(train_metrics);
                out << metrics.str();
            }
        } else if (*evaluate) {
            std::ifstream in(eval_model);
            if (!in) {
                throw std::runtime_error("cannot open model " + eval_model);
            }
            const auto predictor = load_model(in);
            const auto sla = eval_opts.sla.empty() ? predictor.sla() : sla_of(eval_opts.sla).at(0);
            EvalConfig config;
            config.rw_values = parse_list<double>(eval_rw);
            config.windows_per_value = eval_windows;
            config.window_us = window_us(eval_opts, config.window_us);
            config.percentile = eval_opts.percentile;
            const auto report = evaluate_policies(cluster_of(eval_opts), workload_of(eval_opts), predictor,
                                                  sla, config, eval_opts.seed);
            auto out = open_out(eval_opts.out);
            out << "policy,rw,window,level,infeasible,l_ms,s_ms,t_ops,p,satisfied\n";
            for (const auto& w : report.windows) {
                fmt::print(out, "{},{:.6f},{},{},{},{:.6f},{:.6f},{:.6f},{},{}\n", w.policy, w.rw, w.window,
                           to_string(w.level), w.infeasible ? 1 : 0, w.row.l_ms, w.row.s_ms, w.row.t_ops,
                           w.row.p, w.satisfied ? 1 : 0);
            }
            std::ostringstream summary;
            summary << "policy,m_statistic\n";
            for (const auto& policy : report.policy_order) {
                fmt::print(summary, "{},{:.4f}\n", policy, report.m_values.at(policy));
            }
            if (!eval_summary.empty()) {
                auto s = open_out(eval_summary);
                s << summary.str();
            }
            std::cout << summary.str();
        } else if (*sweep) {
            const auto cluster = cluster_of(sweep_opts);
            const auto base = workload_of(sweep_opts);
            const std::optional<SubSLA> sla =
                sweep_opts.sla.empty() ? std::nullopt : std::optional<SubSLA>(sla_of(sweep_opts.sla).at(0));
            CorpusGrid grid;
            grid.rw_values = parse_list<double>(sweep_rw);
            grid.tc_values = parse_list<int>(sweep_tc);
            grid.repetitions = sweep_reps;
            grid.window_us = window_us(sweep_opts, 10'000'000);
            grid.percentile = sweep_opts.percentile;
            const auto rows = generate_corpus(cluster, base, grid, sweep_opts.seed);
            auto out = open_out(sweep_opts.out);
            out << "rw,tc,level,l_ms,s_ms,t_ops,p" << (sla ? ",satisfied" : "") << "\n";
            for (const auto& r : rows) {
                fmt::print(out, "{:.6f},{},{},{:.6f},{:.6f},{:.6f},{}", r.rw, r.tc, to_string(r.c), r.l_ms,
                           r.s_ms, r.t_ops, r.p);
                if (sla) {
                    fmt::print(out, ",{}", satisfies(*sla, r.l_ms, r.s_ms) ? 1 : 0);
                }
                out << '\n';
            }
        } else if (*gamma) {
            std::ifstream in(gamma_trace);
            if (!in) {
                throw std::runtime_error("cannot open trace " + gamma_trace);
            }
            const auto report = gamma_score(to_intervals(read_trace(in)), gamma_opts.percentile);
            auto out = open_out(gamma_opts.out);
            out << "key,gamma_us\n";
            for (const auto& [key, g] : report.per_key_gamma) {
                fmt::print(out, "{},{}\n", key, g);
            }
            fmt::print("percentile,score_us,score_ms\n{},{},{:.3f}\n", report.percentile, report.score_us,
                       report.score_ms());
        } else if (*perf_table) {
            perf_config.validate();
            std::ifstream in(perf_metrics);
            if (!in) {
                throw std::runtime_error("cannot open metrics " + perf_metrics);
            }
            std::ostringstream table;
            table << "name,overhead_ms,cv_error,speedup,accuracy_rel,perf\n";
            std::string line;
            int line_no = 0;
            int rows = 0;
            while (std::getline(in, line)) {
                ++line_no;
                if (!line.empty() && line.back() == '\r') {
                    line.pop_back();
                }
                if (line.empty() || (line_no == 1 && line.rfind("name,", 0) == 0)) {
                    continue;
                }
                std::vector<std::string> fields;
                std::istringstream ls(line);
                for (std::string f; std::getline(ls, f, ',');) {
                    fields.push_back(f);
                }
                double overhead = 0.0;
                double error = 0.0;
                try {
                    if (fields.size() != 3) {
                        throw std::invalid_argument("expected name,overhead_ms,cv_error");
                    }
                    std::size_t used = 0;
                    overhead = std::stod(fields[1], &used);
                    if (used != fields[1].size()) throw std::invalid_argument("bad overhead");
                    error = std::stod(fields[2], &used);
                    if (used != fields[2].size()) throw std::invalid_argument("bad error");
                } catch (const std::exception& e) {
                    throw std::runtime_error(fmt::format("{}: line {}: {}", perf_metrics, line_no, e.what()));
                }
                fmt::print(table, "{},{},{},{:.4f},{:.4f},{:.4f}\n", fields[0], fields[1], fields[2],
                           (perf_config.o_base - overhead) / perf_config.o_base,
                           (perf_config.e_base - error) / perf_config.e_base, perf(overhead, error, perf_config));
                ++rows;
            }
            if (rows == 0) {
                throw std::runtime_error(perf_metrics + " has no rows");
            }
            auto out = open_out(perf_opts.out);
            out << table.str();
            std::cout << table.str();
        }
    } catch (const std::exception& e) {
        std::cerr << "qtune: error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
