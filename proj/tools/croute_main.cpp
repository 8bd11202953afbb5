#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "croute/report.hpp"
#include "croute/scheme.hpp"
#include "croute/simulator.hpp"

using namespace croute;

namespace {

Config load_config(const std::string& path) {
    return path.empty() ? Config{} : Config::from_file(path);
}

int run_build(const std::string& graph_path, const std::string& tree_path,
              const std::string& out_path, const std::string& config_path) {
    Config cfg = load_config(config_path);
    Graph g = Graph::load(graph_path, &std::cerr);
    if (!g.connected()) {
        std::cerr << "error: graph not connected\n";
        return 1;
    }
    SchemeBundle bundle = [&]() {
        if (tree_path.empty()) return SchemeBundle::build(g, cfg);
        auto tree = DecompositionTree::import_file(g, tree_path, cfg);
        return SchemeBundle::build(g, std::move(tree), cfg);
    }();
    bundle.save(out_path);
    std::cout << build_report_json(bundle);
    return 0;
}

int run_simulate(const std::string& bundle_path, const std::string& demand_path, bool exact,
                 int trials, uint64_t seed) {
    SchemeBundle bundle = SchemeBundle::load(bundle_path);
    DemandMatrix d = DemandMatrix::load(demand_path, bundle.graph().node_count());
    Simulator sim(bundle);
    LoadReport rep = exact ? sim.simulate_exact(d) : sim.simulate_monte_carlo(d, trials, seed);
    std::cout << load_report_json(bundle, rep);
    return 0;
}

int run_evaluate(const std::string& bundle_path, const std::string& demand_path, bool exact,
                 int trials, uint64_t seed) {
    SchemeBundle bundle = SchemeBundle::load(bundle_path);
    DemandMatrix d = DemandMatrix::load(demand_path, bundle.graph().node_count());
    Simulator sim(bundle);
    LoadReport rep = exact ? sim.simulate_exact(d) : sim.simulate_monte_carlo(d, trials, seed);
    CongestionCertificate oracle = opt_congestion(bundle.graph(), d, bundle.config());
    std::cout << evaluate_report_json(bundle, rep, oracle);
    return 0;
}

int run_info(const std::string& bundle_path, int probe) {
    SchemeBundle bundle = SchemeBundle::load(bundle_path);
    Simulator sim(bundle);
    std::cout << size_report_json(bundle, sim.measure(probe));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"compact oblivious routing tables: build, simulate, evaluate"};
    app.require_subcommand(1);

    std::string graph_path, tree_path, bundle_path, demand_path, config_path, out_path;
    bool exact = false;
    int trials = 1000;
    int probe = 4;
    uint64_t seed = 12345;

    auto* build = app.add_subcommand("build", "construct routing tables for a graph");
    build->add_option("-g,--graph", graph_path, "graph file: lines 'u v capacity'")->required();
    build->add_option("-t,--tree", tree_path, "decomposition tree file (optional)");
    build->add_option("-o,--output", out_path, "output bundle file")->required();
    build->add_option("-c,--config", config_path, "key=value config file");

    auto* simulate = app.add_subcommand("simulate", "forward packets and report loads");
    simulate->add_option("-b,--bundle", bundle_path, "bundle file")->required();
    simulate->add_option("-d,--demands", demand_path, "demand file: lines 'u v amount'")->required();
    simulate->add_flag("--exact", exact, "exact expected loads instead of sampling");
    simulate->add_option("--trials", trials, "Monte Carlo trials per pair");
    simulate->add_option("--seed", seed, "RNG seed");

    auto* evaluate = app.add_subcommand("evaluate", "simulate and compare with the optimum");
    evaluate->add_option("-b,--bundle", bundle_path, "bundle file")->required();
    evaluate->add_option("-d,--demands", demand_path, "demand file")->required();
    evaluate->add_flag("--exact", exact, "exact expected loads instead of sampling");
    evaluate->add_option("--trials", trials, "Monte Carlo trials per pair");
    evaluate->add_option("--seed", seed, "RNG seed");

    auto* info = app.add_subcommand("info", "table/label/header size report");
    info->add_option("-b,--bundle", bundle_path, "bundle file")->required();
    info->add_option("--probe", probe, "header-probe packets per pair");

    CLI11_PARSE(app, argc, argv);

    try {
        if (build->parsed()) return run_build(graph_path, tree_path, out_path, config_path);
        if (simulate->parsed()) return run_simulate(bundle_path, demand_path, exact, trials, seed);
        if (evaluate->parsed()) return run_evaluate(bundle_path, demand_path, exact, trials, seed);
        if (info->parsed()) return run_info(bundle_path, probe);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::runtime_error& e) {
        // construction failures carry the offending cluster id
        std::cerr << "error: " << e.what() << "\n";
        return std::string(e.what()).rfind("cluster ", 0) == 0 ? 2 : 1;
    }
    return 1;
}
