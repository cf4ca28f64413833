#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gftransfer/error.hpp"
#include "gftransfer/experiment.hpp"
#include "gftransfer/io.hpp"

namespace gftransfer {

// ---- configuration ------------------------------------------------------------

namespace detail {

inline std::string trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return std::string(s);
}

inline std::vector<std::string> list_items(const std::string& value) {
    std::vector<std::string> out;
    for (const auto& item : split(value, ',')) {
        std::string t = trim(item);
        if (!t.empty()) out.push_back(std::move(t));
    }
    require(!out.empty(), ErrorCode::ParseError, "empty list");
    return out;
}

inline bool parse_bool(const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw Error(ErrorCode::ParseError, "not a boolean: '" + v + "'");
}

inline GraphKind parse_graph_kind(const std::string& v) {
    if (v == "er" || v == "ER") return GraphKind::ER;
    if (v == "rs" || v == "RS") return GraphKind::RS;
    throw Error(ErrorCode::ParseError, "unknown graph kind '" + v + "' (expected er or rs)");
}

inline PerturbationKind parse_perturbation(const std::string& v) {
    if (v == "edges") return PerturbationKind::Edges;
    if (v == "nodes") return PerturbationKind::Nodes;
    throw Error(ErrorCode::ParseError, "unknown perturbation '" + v + "' (expected edges or nodes)");
}

inline PsdProfile parse_profile(const std::string& v) {
    if (v == "lowpass") return PsdProfile::LowPass;
    if (v == "inverse") return PsdProfile::Inverse;
    throw Error(ErrorCode::ParseError, "unknown PSD profile '" + v + "' (expected lowpass or inverse)");
}

}  // namespace detail

/// Applies one `key = value` setting.
inline void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
    using namespace detail;
    auto& arma = cfg.transfer.arma;
    auto& ratio = cfg.transfer.ratio;
    const std::map<std::string, std::function<void(const std::string&)>> setters{
        {"graphs",
         [&](const std::string& v) {
             cfg.graphs.clear();
             for (const auto& g : list_items(v)) cfg.graphs.push_back(parse_graph_kind(g));
         }},
        {"nodes", [&](const std::string& v) { cfg.nodes = parse_integer<Index>(v); }},
        {"er_p", [&](const std::string& v) { cfg.er_p = parse_double(v); }},
        {"er_weight_low", [&](const std::string& v) { cfg.er_weight_low = parse_double(v); }},
        {"er_weight_high", [&](const std::string& v) { cfg.er_weight_high = parse_double(v); }},
        {"rs_k", [&](const std::string& v) { cfg.rs_k = parse_integer<Index>(v); }},
        {"perturbation", [&](const std::string& v) { cfg.perturbation = parse_perturbation(v); }},
        {"sizes",
         [&](const std::string& v) {
             cfg.sizes.clear();
             for (const auto& s : list_items(v)) cfg.sizes.push_back(parse_integer<std::size_t>(s));
         }},
        {"p_v", [&](const std::string& v) { cfg.p_v = parse_double(v); }},
        {"hist_psd", [&](const std::string& v) { cfg.hist_psd = parse_profile(v); }},
        {"curr_psd", [&](const std::string& v) { cfg.curr_psd = parse_profile(v); }},
        {"k_hist", [&](const std::string& v) { cfg.k_hist = parse_integer<Index>(v); }},
        {"k_curr", [&](const std::string& v) { cfg.k_curr = parse_integer<Index>(v); }},
        {"missing_prob", [&](const std::string& v) { cfg.missing_prob = parse_double(v); }},
        {"noise_var", [&](const std::string& v) { cfg.noise_var = parse_double(v); }},
        {"mse_scope",
         [&](const std::string& v) {
             if (v == "all") cfg.mse_scope = MseScope::AllNodes;
             else if (v == "missing") cfg.mse_scope = MseScope::MissingOnly;
             else throw Error(ErrorCode::ParseError, "mse_scope must be all or missing");
         }},
        {"trials", [&](const std::string& v) { cfg.trials = parse_integer<std::size_t>(v); }},
        {"seed", [&](const std::string& v) { cfg.seed = parse_integer<std::uint64_t>(v); }},
        {"threads", [&](const std::string& v) { cfg.threads = parse_integer<unsigned>(v); }},
        {"num_order", [&](const std::string& v) { arma.num_order = parse_integer<int>(v); }},
        {"den_order", [&](const std::string& v) { arma.den_order = parse_integer<int>(v); }},
        {"reg_alpha", [&](const std::string& v) { arma.reg_alpha = parse_double(v); }},
        {"reg_beta", [&](const std::string& v) { arma.reg_beta = parse_double(v); }},
        {"tolerance", [&](const std::string& v) { arma.tolerance = parse_double(v); }},
        {"max_iterations", [&](const std::string& v) { arma.max_iterations = parse_integer<int>(v); }},
        {"den_floor", [&](const std::string& v) { arma.den_floor = parse_double(v); }},
        {"convention",
         [&](const std::string& v) {
             if (v == "squared") cfg.transfer.convention = PsdConvention::Squared;
             else if (v == "linear") cfg.transfer.convention = PsdConvention::Linear;
             else throw Error(ErrorCode::ParseError, "convention must be squared or linear");
         }},
        {"include_noise", [&](const std::string& v) { cfg.transfer.include_noise = parse_bool(v); }},
        {"normalize_weights", [&](const std::string& v) { cfg.transfer.normalize_weights = parse_bool(v); }},
        {"ratio_centers", [&](const std::string& v) { ratio.max_centers = parse_integer<Index>(v); }},
        {"ratio_lambdas",
         [&](const std::string& v) {
             ratio.lambda_grid.clear();
             for (const auto& s : list_items(v)) ratio.lambda_grid.push_back(parse_double(s));
         }},
        {"ratio_folds", [&](const std::string& v) { ratio.folds = parse_integer<int>(v); }},
        {"ratio_median_points", [&](const std::string& v) { ratio.median_max_points = parse_integer<Index>(v); }},
        {"ratio_pooled_bandwidth", [&](const std::string& v) { ratio.pooled_bandwidth = parse_bool(v); }},
    };
    const auto it = setters.find(key);
    require(it != setters.end(), ErrorCode::ParseError, "unknown config key '" + key + "'");
    it->second(value);
}

/// `key = value` lines; `#` starts a comment.
inline ExperimentConfig parse_config(std::istream& in) {
    ExperimentConfig cfg;
    int line_no = 0;
    for (std::string line; std::getline(in, line);) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const std::string body = detail::trim(line);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        require(eq != std::string::npos, ErrorCode::ParseError,
                "config line " + std::to_string(line_no) + ": expected 'key = value'");
        try {
            apply_setting(cfg, detail::trim(body.substr(0, eq)), detail::trim(body.substr(eq + 1)));
        } catch (const Error& e) {
            throw Error(e.code(), "config line " + std::to_string(line_no) + ": " + e.message());
        }
    }
    cfg.validate();
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), ErrorCode::IoError, "cannot open config '" + path + "'");
    return parse_config(in);
}

// ---- results ----------------------------------------------------------------

inline constexpr const char* kResultsHeader =
    "graph,perturbation,size,trials,failed,noisy_mean,noisy_se,armae_mean,armae_se,drw_mean,drw_se,oracle_mean,"
    "oracle_se";

inline void write_results_csv(std::ostream& out, const std::vector<CellSummary>& rows) {
    out << kResultsHeader << '\n';
    for (const CellSummary& r : rows) {
        out << to_string(r.cell.graph) << ',' << to_string(r.cell.perturbation) << ',' << r.cell.size << ',' << r.trials
            << ',' << r.failed;
        for (const MethodSummary* m : {&r.noisy, &r.armae, &r.drw, &r.oracle})
            out << ',' << format_double(m->mean) << ',' << format_double(m->std_error);
        out << '\n';
    }
}

inline std::vector<CellSummary> read_results_csv(std::istream& in) {
    std::string line;
    require(static_cast<bool>(std::getline(in, line)) && detail::trim(line) == kResultsHeader, ErrorCode::ParseError,
            "results file lacks the expected header");
    std::vector<CellSummary> rows;
    while (std::getline(in, line)) {
        if (detail::trim(line).empty()) continue;
        const auto c = split(detail::trim(line), ',');
        require(c.size() == 13, ErrorCode::ParseError, "results row must have 13 fields");
        CellSummary r;
        r.cell.graph = detail::parse_graph_kind(c[0]);
        r.cell.perturbation = detail::parse_perturbation(c[1]);
        r.cell.size = parse_integer<std::size_t>(c[2]);
        r.trials = parse_integer<std::size_t>(c[3]);
        r.failed = parse_integer<std::size_t>(c[4]);
        MethodSummary* methods[] = {&r.noisy, &r.armae, &r.drw, &r.oracle};
        for (std::size_t m = 0; m < 4; ++m) {
            methods[m]->mean = parse_double(c[5 + 2 * m]);
            methods[m]->std_error = parse_double(c[6 + 2 * m]);
        }
        rows.push_back(r);
    }
    return rows;
}

inline void write_trials_csv(std::ostream& out, const std::vector<TrialResult>& trials) {
    out << "graph,perturbation,size,trial,seed,status,noisy,armae,drw,oracle,drw_lambda,weight_min,weight_mean,"
           "weight_max,armae_iterations,drw_iterations,convention,error\n";
    for (const TrialResult& t : trials) {
        out << to_string(t.cell.graph) << ',' << to_string(t.cell.perturbation) << ',' << t.cell.size << ',' << t.trial
            << ',' << t.seed << ',' << (t.ok ? "ok" : "failed") << ',';
        if (t.ok) {
            out << format_double(t.mse_noisy) << ',' << format_double(t.mse_armae) << ',' << format_double(t.mse_drw)
                << ',' << format_double(t.mse_oracle) << ',' << format_double(t.drw.reg_lambda) << ','
                << format_double(t.drw.weight_min) << ',' << format_double(t.drw.weight_mean) << ','
                << format_double(t.drw.weight_max) << ',' << t.armae.iterations << ',' << t.drw.iterations << ','
                << to_string(t.drw.convention) << ',';
        } else {
            out << ",,,,,,,,,,,";
        }
        std::string err = t.error;
        std::replace(err.begin(), err.end(), ',', ';');
        std::replace(err.begin(), err.end(), '\n', ' ');
        out << err << '\n';
    }
}

/// Aligned plain-text table: one block per perturbation kind, methods by
/// perturbation size, one column per graph family, MSE in units of 1e-2.
inline std::string format_table(const std::vector<CellSummary>& rows) {
    std::ostringstream out;
    std::set<PerturbationKind> kinds;
    for (const auto& r : rows) kinds.insert(r.cell.perturbation);
    for (PerturbationKind kind : kinds) {
        std::set<std::size_t> sizes;
        std::set<GraphKind> graphs;
        std::map<std::pair<GraphKind, std::size_t>, const CellSummary*> lookup;
        for (const auto& r : rows) {
            if (r.cell.perturbation != kind) continue;
            sizes.insert(r.cell.size);
            graphs.insert(r.cell.graph);
            lookup[{r.cell.graph, r.cell.size}] = &r;
        }
        out << "Average MSE (x 1e-2) under " << (kind == PerturbationKind::Edges ? "edge" : "node") << " changes\n";
        char buf[128];
        std::snprintf(buf, sizeof buf, "%-10s %4s", "Method", kind == PerturbationKind::Edges ? "e" : "v");
        out << buf;
        for (GraphKind g : graphs) {
            std::snprintf(buf, sizeof buf, " %10s", (to_string(g) + " graph").c_str());
            out << buf;
        }
        out << '\n';
        const std::pair<const char*, MethodSummary CellSummary::*> methods[] = {
            {"Noisy", &CellSummary::noisy}, {"ARMAE", &CellSummary::armae}, {"ARMAE-DRW", &CellSummary::drw}};
        for (const auto& [name, member] : methods) {
            for (std::size_t s : sizes) {
                std::snprintf(buf, sizeof buf, "%-10s %4zu", name, s);
                out << buf;
                for (GraphKind g : graphs) {
                    const auto it = lookup.find({g, s});
                    if (it == lookup.end()) std::snprintf(buf, sizeof buf, " %10s", "-");
                    else std::snprintf(buf, sizeof buf, " %10.2f", 100.0 * (it->second->*member).mean);
                    out << buf;
                }
                out << '\n';
            }
        }
        out << '\n';
    }
    return out.str();
}

// ---- per-node recovery dump -------------------------------------------------------

struct RecoveryDump {
    TrialResult trial;
    Graph graph;
    double mse_noisy = 0.0;  // of the dumped sample
    double mse_armae = 0.0;
    double mse_drw = 0.0;
};

/// Simulates trial `trial` of `cell` and writes one CSV row per current node for
/// sample `sample_index`: node_id, pos_x, pos_y, observed, x, y_or_missing,
/// x_noisy, x_armae, x_drw. Missing nodes have observed = 0 and an empty
/// y_or_missing field. Returns the trial and per-sample MSEs.
inline RecoveryDump dump_recovery(const ExperimentConfig& cfg, const CellSpec& cell, std::size_t trial,
                                  Index sample_index, std::ostream& out) {
    require(sample_index >= 0 && sample_index < cfg.k_curr, ErrorCode::IndexOutOfRange,
            "sample index " + std::to_string(sample_index) + " outside [0, " + std::to_string(cfg.k_curr) + ")");
    TrialCapture cap;
    TrialResult result = simulate_trial(cfg, cell, trial_seed(cfg.seed, cell, trial), &cap);
    result.trial = trial;
    const Graph& g = *cap.graph_c;
    const ObservationModel& mask = *cap.mask;
    const auto k = sample_index;

    out << "node_id,pos_x,pos_y,observed,x,y_or_missing,x_noisy,x_armae,x_drw\n";
    for (Index i = 0; i < g.size(); ++i) {
        out << g.node_ids()[static_cast<std::size_t>(i)] << ',';
        if (g.has_positions()) {
            const Point2& p = (*g.positions())[static_cast<std::size_t>(i)];
            out << format_double(p.x) << ',' << format_double(p.y) << ',';
        } else {
            out << ",,";
        }
        const Index row = mask.row_of(i);
        out << (row >= 0 ? 1 : 0) << ',' << format_double(cap.x_curr(i, k)) << ','
            << (row >= 0 ? format_double(cap.y_curr(row, k)) : std::string()) << ','
            << format_double(cap.noisy_fill(i, k)) << ',' << format_double(cap.x_armae(i, k)) << ','
            << format_double(cap.x_drw(i, k)) << '\n';
    }

    RecoveryDump dump{result, g};
    const Eigen::VectorXd truth = cap.x_curr.col(k);
    dump.mse_noisy = mse(truth, cap.noisy_fill.col(k));
    dump.mse_armae = mse(truth, cap.x_armae.col(k));
    dump.mse_drw = mse(truth, cap.x_drw.col(k));
    return dump;
}

/// Edge sidecar for a dump: `source,target,weight` per edge, by node id.
inline void write_edges_csv(std::ostream& out, const Graph& g) {
    out << "source,target,weight\n";
    for (auto [i, j] : g.edges())
        out << g.node_ids()[static_cast<std::size_t>(i)] << ',' << g.node_ids()[static_cast<std::size_t>(j)] << ','
            << format_double(g.weights()(i, j)) << '\n';
}

}  // namespace gftransfer
