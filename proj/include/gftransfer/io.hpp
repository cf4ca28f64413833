#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <tuple>
#include <vector>

#include "gftransfer/density_ratio.hpp"
#include "gftransfer/error.hpp"
#include "gftransfer/graph.hpp"
#include "gftransfer/recovery.hpp"
#include "gftransfer/spectral_fit.hpp"

namespace gftransfer {

/// Shortest decimal text that parses back to the same double.
inline std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view text) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) text.remove_suffix(1);
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    double v = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    require(res.ec == std::errc{} && res.ptr == text.data() + text.size(), ErrorCode::ParseError,
            "not a number: '" + std::string(text) + "'");
    return v;
}

template <class Int>
Int parse_integer(std::string_view text) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) text.remove_suffix(1);
    Int v{};
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    require(res.ec == std::errc{} && res.ptr == text.data() + text.size(), ErrorCode::ParseError,
            "not an integer: '" + std::string(text) + "'");
    return v;
}

inline std::vector<std::string> split(std::string_view line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t pos = line.find(sep, start);
        out.emplace_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline std::vector<std::string> tokens(const std::string& line) {
    std::istringstream in(line);
    std::vector<std::string> out;
    for (std::string t; in >> t;) out.push_back(t);
    return out;
}

// ---- graphs ---------------------------------------------------------------

/// Edge-list text: `nodes N`, one `node <id>` line per node in row order,
/// optional `pos <id> <x> <y>` lines, then `<id_a> <id_b> <weight>` per edge.
/// Without `node` lines the ids default to 0..N-1.
inline void write_graph(std::ostream& out, const Graph& g) {
    out << "nodes " << g.size() << '\n';
    for (NodeId id : g.node_ids()) out << "node " << id << '\n';
    if (g.has_positions()) {
        const auto& pos = *g.positions();
        for (Index i = 0; i < g.size(); ++i)
            out << "pos " << g.node_ids()[static_cast<std::size_t>(i)] << ' ' << format_double(pos[static_cast<std::size_t>(i)].x)
                << ' ' << format_double(pos[static_cast<std::size_t>(i)].y) << '\n';
    }
    for (auto [i, j] : g.edges())
        out << g.node_ids()[static_cast<std::size_t>(i)] << ' ' << g.node_ids()[static_cast<std::size_t>(j)] << ' '
            << format_double(g.weights()(i, j)) << '\n';
}

inline Graph read_graph(std::istream& in) {
    std::optional<Index> n;
    std::vector<NodeId> ids;
    std::vector<std::pair<NodeId, Point2>> pos_lines;
    std::vector<std::tuple<NodeId, NodeId, double>> edge_lines;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto t = tokens(line);
        if (t.empty() || t[0][0] == '#') continue;
        const std::string where = "graph line " + std::to_string(line_no);
        if (t[0] == "nodes") {
            require(t.size() == 2 && !n, ErrorCode::ParseError, where + ": bad nodes header");
            n = parse_integer<Index>(t[1]);
        } else if (t[0] == "node") {
            require(t.size() == 2, ErrorCode::ParseError, where + ": expected 'node <id>'");
            ids.push_back(parse_integer<NodeId>(t[1]));
        } else if (t[0] == "pos") {
            require(t.size() == 4, ErrorCode::ParseError, where + ": expected 'pos <id> <x> <y>'");
            pos_lines.push_back({parse_integer<NodeId>(t[1]), Point2{parse_double(t[2]), parse_double(t[3])}});
        } else {
            require(t.size() == 3, ErrorCode::ParseError, where + ": expected '<a> <b> <weight>'");
            edge_lines.emplace_back(parse_integer<NodeId>(t[0]), parse_integer<NodeId>(t[1]), parse_double(t[2]));
        }
    }
    require(n.has_value() && *n >= 0, ErrorCode::ParseError, "missing 'nodes N' header");
    if (ids.empty()) ids = iota_ids(*n);
    require(static_cast<Index>(ids.size()) == *n, ErrorCode::ParseError, "node line count != N");

    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(*n, *n);
    std::optional<std::vector<Point2>> positions;
    // Row lookup through a temporary graph keeps id validation in one place.
    const Graph shape(Eigen::MatrixXd::Zero(*n, *n), ids);
    auto row = [&](NodeId id) {
        const auto r = shape.index_of(id);
        require(r.has_value(), ErrorCode::ParseError, "unknown node id " + std::to_string(id));
        return *r;
    };
    if (!pos_lines.empty()) {
        require(static_cast<Index>(pos_lines.size()) == *n, ErrorCode::ParseError, "positions must cover every node");
        positions.emplace(static_cast<std::size_t>(*n));
        for (const auto& [id, p] : pos_lines) (*positions)[static_cast<std::size_t>(row(id))] = p;
    }
    for (const auto& [a, b, weight] : edge_lines) {
        const Index i = row(a);
        const Index j = row(b);
        w(i, j) = weight;
        w(j, i) = weight;
    }
    return Graph(std::move(w), std::move(ids), std::move(positions));
}

// ---- signals and masks ------------------------------------------------------

/// One row per sample (column of `signals`), header row of node ids.
inline void write_signals_csv(std::ostream& out, const Eigen::MatrixXd& signals, const std::vector<NodeId>& ids) {
    require(static_cast<Index>(ids.size()) == signals.rows(), ErrorCode::DimensionMismatch, "one id per signal row");
    for (std::size_t i = 0; i < ids.size(); ++i) out << (i ? "," : "") << ids[i];
    out << '\n';
    for (Index k = 0; k < signals.cols(); ++k) {
        for (Index i = 0; i < signals.rows(); ++i) out << (i ? "," : "") << format_double(signals(i, k));
        out << '\n';
    }
}

struct SignalBatch {
    std::vector<NodeId> ids;
    Eigen::MatrixXd signals;  // N x K
};

inline SignalBatch read_signals_csv(std::istream& in) {
    SignalBatch batch;
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), ErrorCode::ParseError, "missing header row");
    for (const auto& cell : split(line, ',')) batch.ids.push_back(parse_integer<NodeId>(cell));
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        const auto cells = split(line, ',');
        require(cells.size() == batch.ids.size(), ErrorCode::ParseError, "row width != header width");
        std::vector<double>& r = rows.emplace_back();
        for (const auto& c : cells) r.push_back(parse_double(c));
    }
    batch.signals.resize(static_cast<Index>(batch.ids.size()), static_cast<Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k)
        for (std::size_t i = 0; i < batch.ids.size(); ++i) batch.signals(static_cast<Index>(i), static_cast<Index>(k)) = rows[k][i];
    return batch;
}

/// `observed <id> <id> ...` followed by `noise_std <value>`.
inline void write_mask(std::ostream& out, const ObservationModel& mask, const std::vector<NodeId>& ids) {
    require(static_cast<Index>(ids.size()) == mask.signal_size(), ErrorCode::DimensionMismatch, "one id per node");
    out << "observed";
    for (Index i : mask.observed()) out << ' ' << ids[static_cast<std::size_t>(i)];
    out << "\nnoise_std " << format_double(mask.noise_std()) << '\n';
}

inline ObservationModel read_mask(std::istream& in, const std::vector<NodeId>& ids) {
    std::vector<Index> observed;
    double noise_std = 0.0;
    for (std::string line; std::getline(in, line);) {
        const auto t = tokens(line);
        if (t.empty()) continue;
        if (t[0] == "observed") {
            for (std::size_t k = 1; k < t.size(); ++k) {
                const auto id = parse_integer<NodeId>(t[k]);
                const auto it = std::find(ids.begin(), ids.end(), id);
                require(it != ids.end(), ErrorCode::ParseError, "mask names unknown node " + t[k]);
                observed.push_back(static_cast<Index>(it - ids.begin()));
            }
        } else if (t[0] == "noise_std" && t.size() == 2) {
            noise_std = parse_double(t[1]);
        } else {
            throw Error(ErrorCode::ParseError, "unexpected mask line: " + line);
        }
    }
    return ObservationModel(static_cast<Index>(ids.size()), std::move(observed), noise_std);
}

// ---- fitted models ----------------------------------------------------------

inline void write_vector_line(std::ostream& out, std::string_view key, const Eigen::VectorXd& v) {
    out << key;
    for (Index i = 0; i < v.size(); ++i) out << ' ' << format_double(v(i));
    out << '\n';
}

inline Eigen::VectorXd vector_from_tokens(const std::vector<std::string>& t, std::size_t first) {
    Eigen::VectorXd v(static_cast<Index>(t.size() - first));
    for (std::size_t k = first; k < t.size(); ++k) v(static_cast<Index>(k - first)) = parse_double(t[k]);
    return v;
}

inline void write_arma(std::ostream& out, const ArmaFit& fit) {
    out << "arma\nnum_order " << fit.params.numerator_order() << "\nden_order " << fit.params.denominator_order() << '\n';
    write_vector_line(out, "beta", fit.params.beta);
    write_vector_line(out, "alpha", fit.params.alpha);
    out << "objective " << format_double(fit.objective) << "\niterations " << fit.iterations << "\nkkt_residual "
        << format_double(fit.kkt_residual) << "\nconverged " << (fit.converged ? 1 : 0) << '\n';
}

inline ArmaFit read_arma(std::istream& in) {
    ArmaFit fit;
    int num_order = -1;
    int den_order = -1;
    bool header = false;
    for (std::string line; std::getline(in, line);) {
        const auto t = tokens(line);
        if (t.empty()) continue;
        const std::string& key = t[0];
        if (key == "arma") header = true;
        else if (key == "num_order" && t.size() == 2) num_order = parse_integer<int>(t[1]);
        else if (key == "den_order" && t.size() == 2) den_order = parse_integer<int>(t[1]);
        else if (key == "beta") fit.params.beta = vector_from_tokens(t, 1);
        else if (key == "alpha") fit.params.alpha = vector_from_tokens(t, 1);
        else if (key == "objective" && t.size() == 2) fit.objective = parse_double(t[1]);
        else if (key == "iterations" && t.size() == 2) fit.iterations = parse_integer<int>(t[1]);
        else if (key == "kkt_residual" && t.size() == 2) fit.kkt_residual = parse_double(t[1]);
        else if (key == "converged" && t.size() == 2) fit.converged = parse_integer<int>(t[1]) != 0;
        else throw Error(ErrorCode::ParseError, "unexpected ARMA record line: " + line);
    }
    require(header, ErrorCode::ParseError, "missing 'arma' header");
    require(fit.params.numerator_order() == num_order && fit.params.denominator_order() == den_order,
            ErrorCode::ParseError, "coefficient counts disagree with the declared orders");
    return fit;
}

inline void write_ratio_model(std::ostream& out, const DensityRatioModel& model) {
    out << "ratio_model\ndimension " << model.basis.dimension() << "\ncenters " << model.basis.size() << "\nbandwidth "
        << format_double(model.basis.bandwidth) << "\nlambda " << format_double(model.reg_lambda) << '\n';
    write_vector_line(out, "theta", model.theta);
    for (Index j = 0; j < model.basis.size(); ++j) write_vector_line(out, "center", model.basis.centers.col(j));
}

inline DensityRatioModel read_ratio_model(std::istream& in) {
    DensityRatioModel model;
    Index dim = -1;
    Index count = -1;
    bool header = false;
    std::vector<Eigen::VectorXd> centers;
    for (std::string line; std::getline(in, line);) {
        const auto t = tokens(line);
        if (t.empty()) continue;
        const std::string& key = t[0];
        if (key == "ratio_model") header = true;
        else if (key == "dimension" && t.size() == 2) dim = parse_integer<Index>(t[1]);
        else if (key == "centers" && t.size() == 2) count = parse_integer<Index>(t[1]);
        else if (key == "bandwidth" && t.size() == 2) model.basis.bandwidth = parse_double(t[1]);
        else if (key == "lambda" && t.size() == 2) model.reg_lambda = parse_double(t[1]);
        else if (key == "theta") model.theta = vector_from_tokens(t, 1);
        else if (key == "center") centers.push_back(vector_from_tokens(t, 1));
        else throw Error(ErrorCode::ParseError, "unexpected ratio model line: " + line);
    }
    require(header && dim >= 0 && count >= 0, ErrorCode::ParseError, "incomplete ratio model header");
    require(static_cast<Index>(centers.size()) == count && model.theta.size() == count, ErrorCode::ParseError,
            "center/theta count mismatch");
    model.basis.centers.resize(dim, count);
    for (Index j = 0; j < count; ++j) {
        require(centers[static_cast<std::size_t>(j)].size() == dim, ErrorCode::ParseError, "center dimension mismatch");
        model.basis.centers.col(j) = centers[static_cast<std::size_t>(j)];
    }
    require(model.basis.bandwidth > 0.0, ErrorCode::ParseError, "bandwidth must be > 0");
    return model;
}

}  // namespace gftransfer
