#include "croute/report.hpp"

#include "json.hpp"

namespace croute {

namespace {

using nlohmann::json;

json config_json(const Config& cfg) {
    json j;
    for (const auto& [k, v] : cfg.items()) j[k] = v;
    return j;
}

json edges_json(const Graph& g, const std::vector<Rat>& loads) {
    json arr = json::array();
    for (int e = 0; e < g.edge_count(); ++e)
        arr.push_back({g.edge(e).u, g.edge(e).v, rat_str(loads[e])});
    return arr;
}

}  // namespace

std::string load_report_json(const SchemeBundle& b, const LoadReport& rep) {
    json j;
    j["per_edge"] = edges_json(b.graph(), rep.per_edge);
    j["congestion"] = rat_str(rep.congestion);
    json delivery = json::array();
    for (const auto& [pair, frac] : rep.delivery)
        delivery.push_back({pair.first, pair.second, rat_str(frac)});
    j["delivery"] = delivery;
    j["trials"] = rep.trials;
    j["seed"] = rep.seed;
    j["max_header_bits"] = rep.max_header_bits;
    j["faults"] = rep.faults;
    j["config"] = config_json(b.config());
    return j.dump(2) + "\n";
}

std::string size_report_json(const SchemeBundle& b, const SizeReport& rep) {
    const Graph& g = b.graph();
    json j;
    j["n"] = g.node_count();
    j["m"] = g.edge_count();
    j["W"] = g.max_capacity();
    j["height"] = b.tree().height();
    j["degT"] = b.tree().degree();
    j["bits_per_node"] = rep.bits_per_node;
    j["label_bits_total"] = rep.label_bits_total;
    j["label_component_bits"] = b.label_component_bits();
    j["max_header_bits"] = rep.max_header_bits;
    j["max_header_bits_budget"] = b.max_header_bits_budget();
    j["max_compactness"] = rep.max_compactness;
    j["config"] = config_json(b.config());
    return j.dump(2) + "\n";
}

std::string build_report_json(const SchemeBundle& b) {
    json j;
    const auto& tree = b.tree();
    j["n"] = b.graph().node_count();
    j["m"] = b.graph().edge_count();
    j["W"] = b.graph().max_capacity();
    j["height"] = tree.height();
    j["degT"] = tree.degree();
    json clusters = json::array();
    for (int id = 0; id < tree.cluster_count(); ++id) {
        const Cluster& c = tree.cluster(id);
        json cj;
        cj["id"] = id;
        cj["depth"] = c.depth;
        cj["size"] = c.size();
        cj["children"] = c.children.size();
        cj["w_total"] = c.w_total;
        cj["pmcf_primal"] = rat_str(c.pmcf.primal);
        cj["pmcf_dual"] = rat_str(c.pmcf.dual);
        cj["active"] = b.scheme(id).active;
        clusters.push_back(cj);
    }
    j["clusters"] = clusters;
    std::vector<size_t> bits(b.graph().node_count());
    for (int v = 0; v < b.graph().node_count(); ++v) bits[v] = b.node_bits(v);
    j["bits_per_node"] = bits;
    j["config"] = config_json(b.config());
    return j.dump(2) + "\n";
}

std::string evaluate_report_json(const SchemeBundle& b, const LoadReport& rep,
                                 const CongestionCertificate& oracle) {
    json j;
    j["scheme_congestion"] = rat_str(rep.congestion);
    j["oracle_primal"] = rat_str(oracle.primal);
    j["oracle_dual"] = rat_str(oracle.dual);
    j["oracle_gap"] = rat_str(oracle.gap());
    j["ratio_vs_primal"] =
        oracle.primal == 0 ? "0/1" : rat_str(Rat(rep.congestion / oracle.primal));
    j["ratio_vs_dual"] = oracle.dual == 0 ? "0/1" : rat_str(Rat(rep.congestion / oracle.dual));
    j["trials"] = rep.trials;
    j["seed"] = rep.seed;
    j["congestion_per_edge"] = edges_json(b.graph(), rep.per_edge);
    j["config"] = config_json(b.config());
    return j.dump(2) + "\n";
}

std::string certificate_json(const Graph& g, const CongestionCertificate& cert) {
    json j;
    j["primal"] = rat_str(cert.primal);
    j["dual"] = rat_str(cert.dual);
    j["gap"] = rat_str(cert.gap());
    j["exact"] = cert.exact;
    j["per_edge_loads"] = edges_json(g, cert.per_edge_loads);
    return j.dump(2) + "\n";
}

}  // namespace croute
