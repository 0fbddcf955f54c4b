// Hypergraph data model, validation, degrees and JSON dataset I/O.
#pragma once

#include <algorithm>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "shnn/errors.hpp"
#include "shnn/matrix.hpp"

namespace shnn {

struct Hypergraph {
    int num_nodes = 0;
    // Each hyperedge is a strictly increasing list of node indices in [0, num_nodes).
    std::vector<std::vector<int>> hyperedges;
    std::optional<Matrix> features;    // n x f_in
    std::optional<std::vector<int>> labels;  // length n, class indices

    int num_hyperedges() const { return static_cast<int>(hyperedges.size()); }

    int num_classes() const {
        if (!labels) return 0;
        int c = 0;
        for (int y : *labels) c = std::max(c, y + 1);
        return c;
    }
};

struct DegreeProfile {
    std::vector<int> node_degrees;  // d_v
    std::vector<int> edge_degrees;  // delta_e
};

// Validates invariants and canonicalizes hyperedge member order (ascending).
inline Hypergraph make_hypergraph(int num_nodes, std::vector<std::vector<int>> hyperedges,
                                  std::optional<Matrix> features = std::nullopt,
                                  std::optional<std::vector<int>> labels = std::nullopt) {
    if (num_nodes <= 0) throw ValidationError("num_nodes must be positive");
    for (auto& e : hyperedges) {
        if (e.empty()) throw ValidationError("empty hyperedge");
        std::sort(e.begin(), e.end());
        for (std::size_t i = 0; i < e.size(); ++i) {
            if (e[i] < 0 || e[i] >= num_nodes) throw ValidationError("node index out of range in hyperedge");
            if (i > 0 && e[i] == e[i - 1]) throw ValidationError("duplicate node index in hyperedge");
        }
    }
    if (features && features->rows() != num_nodes) throw ValidationError("feature row count != num_nodes");
    if (labels && static_cast<int>(labels->size()) != num_nodes) throw ValidationError("label count != num_nodes");
    if (labels)
        for (int y : *labels)
            if (y < 0) throw ValidationError("negative class label");
    return Hypergraph{num_nodes, std::move(hyperedges), std::move(features), std::move(labels)};
}

inline DegreeProfile degrees(const Hypergraph& h) {
    DegreeProfile p;
    p.node_degrees.assign(h.num_nodes, 0);
    p.edge_degrees.reserve(h.hyperedges.size());
    for (const auto& e : h.hyperedges) {
        p.edge_degrees.push_back(static_cast<int>(e.size()));
        for (int v : e) ++p.node_degrees[v];
    }
    return p;
}

// Canonical (node, hyperedge) incidence enumeration: ordered by hyperedge
// index, then ascending node index. This order indexes restriction-map
// storage everywhere in the library.
inline std::vector<std::pair<int, int>> incidence_pairs(const Hypergraph& h) {
    std::vector<std::pair<int, int>> out;
    for (int e = 0; e < h.num_hyperedges(); ++e)
        for (int v : h.hyperedges[e]) out.emplace_back(v, e);
    return out;
}

inline Hypergraph load_hypergraph(std::istream& in) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& ex) {
        throw ParseError(std::string("malformed dataset: ") + ex.what());
    }
    if (!j.is_object() || !j.contains("num_nodes") || !j.contains("hyperedges"))
        throw ParseError("dataset must be an object with num_nodes and hyperedges");
    try {
        int n = j.at("num_nodes").get<int>();
        auto edges = j.at("hyperedges").get<std::vector<std::vector<int>>>();
        std::optional<Matrix> features;
        if (j.contains("features")) {
            auto rows = j.at("features").get<std::vector<std::vector<double>>>();
            int f = rows.empty() ? 0 : static_cast<int>(rows[0].size());
            Matrix x(static_cast<int>(rows.size()), f);
            for (std::size_t i = 0; i < rows.size(); ++i) {
                if (static_cast<int>(rows[i].size()) != f) throw ValidationError("ragged feature rows");
                for (int c = 0; c < f; ++c) x(static_cast<int>(i), c) = rows[i][c];
            }
            features = std::move(x);
        }
        std::optional<std::vector<int>> labels;
        if (j.contains("labels")) labels = j.at("labels").get<std::vector<int>>();
        return make_hypergraph(n, std::move(edges), std::move(features), std::move(labels));
    } catch (const nlohmann::json::exception& ex) {
        throw ParseError(std::string("malformed dataset: ") + ex.what());
    }
}

inline void save_hypergraph(const Hypergraph& h, std::ostream& out) {
    nlohmann::ordered_json j;
    j["num_nodes"] = h.num_nodes;
    j["hyperedges"] = h.hyperedges;
    if (h.features) {
        auto rows = nlohmann::ordered_json::array();
        for (int i = 0; i < h.features->rows(); ++i) {
            auto r = nlohmann::ordered_json::array();
            for (int c = 0; c < h.features->cols(); ++c) r.push_back((*h.features)(i, c));
            rows.push_back(std::move(r));
        }
        j["features"] = std::move(rows);
    }
    if (h.labels) j["labels"] = *h.labels;
    out << j.dump();
}

}  // namespace shnn
