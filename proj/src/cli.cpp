#include "covnet/cli.hpp"

#include "covnet/graphs.hpp"
#include "covnet/io.hpp"
#include "covnet/metrics.hpp"
#include "covnet/posterior.hpp"
#include "covnet/search.hpp"
#include "covnet/simgen.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace covnet {

namespace {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

const char* command_name(Command c) {
    switch (c) {
        case Command::learn: return "learn";
        case Command::score: return "score";
        case Command::simulate: return "simulate";
        case Command::posterior: return "posterior";
        case Command::moralize: return "moralize";
    }
    return "unknown";
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string vector_cell(const Eigen::VectorXd& v) {
    std::string out;
    for (Eigen::Index i = 0; i < v.size(); ++i) out += (i ? ";" : "") + format_double(v(i));
    return out;
}

std::string names_cell(const std::vector<NodeId>& ids, const std::vector<std::string>& names) {
    std::string out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        out += (i ? ";" : "") + names[static_cast<std::size_t>(ids[i])];
    }
    return out;
}

Eigen::MatrixXd columns(const Eigen::MatrixXd& values, const std::vector<NodeId>& ids) {
    Eigen::MatrixXd out(values.rows(), static_cast<Eigen::Index>(ids.size()));
    for (std::size_t i = 0; i < ids.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = values.col(ids[i]);
    return out;
}

GraphPrior graph_prior(const RunConfig& cfg) {
    return cfg.edge_penalty ? GraphPrior::edge_penalty(*cfg.edge_penalty) : GraphPrior::uniform();
}

Hyperparams hyperparams(const RunConfig& cfg) {
    Hyperparams hp{cfg.tau, cfg.delta, cfg.upsilon};
    hp.validate();
    return hp;
}

MetricSpec metric_spec(const RunConfig& cfg, const Dataset& data, std::ostream& err) {
    if (cfg.metric == MetricKind::bge) return MetricSpec::bge(cfg.center);
    CovariateMatrix q = read_covariates(cfg.covariate_path);
    if (!q.spans_intercept()) {
        err << "warning: covariates do not span an intercept; column means are not removed\n";
    }
    MetricSpec spec = cfg.metric == MetricKind::bgecm ? MetricSpec::bgecm(std::move(q))
                                                      : MetricSpec::residual(std::move(q));
    spec.validate(data.n());
    return spec;
}

Json config_json(const RunConfig& cfg) {
    Json j;
    j["data"] = cfg.data_path;
    j["covariates"] = cfg.covariate_path;
    j["metric"] = to_string(cfg.metric);
    j["tau"] = cfg.tau;
    j["delta"] = cfg.delta;
    j["upsilon"] = cfg.upsilon;
    j["center"] = cfg.center;
    j["graph_prior"] = cfg.edge_penalty ? Json{{"kind", "edge-penalty"}, {"kappa", *cfg.edge_penalty}}
                                        : Json{{"kind", "uniform"}};
    if (cfg.command == Command::learn) {
        j["max_parents"] = cfg.max_parents;
        j["restarts"] = cfg.restarts;
        j["seed"] = cfg.seed;
        j["max_iterations"] = cfg.max_iterations;
    } else {
        j["graph"] = cfg.graph_path;
    }
    return j;
}

Json network_json(const ScoredNetwork& net, const std::vector<std::string>& names) {
    Json j;
    j["total_log_score"] = net.total_log_score;
    j["log_prior"] = net.log_prior;
    j["edge_count"] = net.dag.edge_count();
    Json edges = Json::array();
    for (const Edge& e : net.dag.edges()) {
        edges.push_back({{"from", names[static_cast<std::size_t>(e.from)]},
                         {"to", names[static_cast<std::size_t>(e.to)]}});
    }
    j["edges"] = edges;
    Json families = Json::array();
    for (const FamilyScore& f : net.family_scores) {
        Json parents = Json::array();
        for (NodeId u : f.parent_set) parents.push_back(names[static_cast<std::size_t>(u)]);
        families.push_back({{"node", names[static_cast<std::size_t>(f.node)]},
                            {"id", f.node + 1},
                            {"parents", parents},
                            {"log_ml", f.log_ml}});
    }
    j["families"] = families;
    return j;
}

Json report_header(const RunConfig& cfg) {
    Json j;
    j["tool"] = "covnet";
    j["version"] = kVersion;
    j["command"] = command_name(cfg.command);
    j["generated_at"] = utc_timestamp();
    j["config"] = config_json(cfg);
    return j;
}

void emit_json(const RunConfig& cfg, const Json& j, std::ostream& out) {
    const std::string text = j.dump(2) + "\n";
    if (cfg.json_out.empty()) {
        out << text;
    } else {
        write_text_file(cfg.json_out, text);
    }
}

Dag read_graph(const std::string& path, const std::vector<std::string>& names) {
    const auto edges = read_edge_list(path, names);
    return Dag(static_cast<int>(names.size()), edges);
}

void ensure_directory(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory '" + dir + "': " + ec.message());
}

template <class Fn>
std::string render(Fn&& fn) {
    std::ostringstream os;
    fn(os);
    return os.str();
}

int cmd_learn(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const Dataset data = read_dataset(cfg.data_path);
    const MetricSpec metric = metric_spec(cfg, data, err);
    const FamilyScorer scorer(data, metric, hyperparams(cfg));
    SearchConfig search;
    search.max_parents = cfg.max_parents;
    search.restarts = cfg.restarts;
    search.seed = cfg.seed;
    search.max_iterations = cfg.max_iterations;
    search.threads = default_thread_count();
    const ScoredNetwork net = hill_climb(scorer, graph_prior(cfg), search);
    const UndirectedGraph moral = moralize(net.dag);

    Json report = report_header(cfg);
    report["network"] = network_json(net, data.names());
    report["moral_edge_count"] = moral.edge_count();
    if (!cfg.truth_path.empty()) {
        const Dag truth = read_graph(cfg.truth_path, data.names());
        const EdgeAccuracy acc = edge_accuracy(net.dag, truth, cfg.directed);
        report["accuracy"] = {{"mode", cfg.directed ? "directed" : "skeleton"},
                              {"correct", acc.correct},
                              {"spurious", acc.spurious},
                              {"missing", acc.missing}};
    }
    if (!cfg.edges_out.empty()) {
        write_text_file(cfg.edges_out,
                        render([&](std::ostream& os) { write_edge_list(os, net.dag, data.names()); }));
    }
    if (!cfg.dot_out.empty()) write_text_file(cfg.dot_out, to_dot(moral, data.names()));
    emit_json(cfg, report, out);
    return kExitOk;
}

int cmd_score(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const Dataset data = read_dataset(cfg.data_path);
    const MetricSpec metric = metric_spec(cfg, data, err);
    const Dag dag = read_graph(cfg.graph_path, data.names());
    const ScoredNetwork net = dag_log_score(dag, data, metric, hyperparams(cfg), graph_prior(cfg));
    Json report = report_header(cfg);
    report["network"] = network_json(net, data.names());
    emit_json(cfg, report, out);
    return kExitOk;
}

int cmd_posterior(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const Dataset data = read_dataset(cfg.data_path);
    const MetricSpec metric = metric_spec(cfg, data, err);
    const Hyperparams hp = hyperparams(cfg);
    const Dag dag = read_graph(cfg.graph_path, data.names());

    Eigen::MatrixXd values = data.values();
    if (metric.kind == MetricKind::bge && metric.center) {
        values = values.rowwise() - values.colwise().mean();
    } else if (metric.kind == MetricKind::residual) {
        values = build_residual_transform(*metric.covariates).p.transpose() * values;
    }

    std::ostringstream csv;
    csv << "node,parents,gamma_mean,b_mean,psi_shape,psi_rate,psi_mean\n";
    for (NodeId v = 0; v < dag.p(); ++v) {
        const auto& ps = dag.parents(v);
        if (static_cast<Eigen::Index>(ps.size()) >= values.rows()) {
            throw ConstraintError("node " + data.names()[static_cast<std::size_t>(v)] +
                                  " has too many parents for the effective sample count");
        }
        const Eigen::VectorXd y = values.col(v);
        const Eigen::MatrixXd x = columns(values, ps);
        const FamilyPosterior post = metric.kind == MetricKind::bgecm
                                         ? family_posterior(y, x, *metric.covariates, hp)
                                         : family_posterior_iid(y, x, hp);
        csv << data.names()[static_cast<std::size_t>(v)] << ',' << names_cell(ps, data.names())
            << ',' << vector_cell(post.gamma.mean) << ',' << vector_cell(post.b.mean) << ','
            << format_double(post.psi.shape) << ',' << format_double(post.psi.rate) << ','
            << format_double(post.psi.mean()) << '\n';
    }
    if (cfg.csv_out.empty()) {
        out << csv.str();
    } else {
        write_text_file(cfg.csv_out, csv.str());
    }

    if (!cfg.sd_out.empty()) {
        const Eigen::MatrixXd& raw = data.values();
        const double n = static_cast<double>(raw.rows());
        std::ostringstream sd;
        sd << "variable,sd,residual_se\n";
        Eigen::MatrixXd resid;
        double df = 0.0;
        if (metric.covariates) {
            const Eigen::MatrixXd& q = metric.covariates->values();
            resid = raw - q * q.colPivHouseholderQr().solve(raw);
            df = n - static_cast<double>(q.cols());
        }
        for (Eigen::Index c = 0; c < raw.cols(); ++c) {
            const Eigen::VectorXd centred = raw.col(c).array() - raw.col(c).mean();
            const double s = n > 1 ? std::sqrt(centred.squaredNorm() / (n - 1)) : 0.0;
            sd << data.names()[static_cast<std::size_t>(c)] << ',' << format_double(s) << ',';
            if (metric.covariates) sd << format_double(std::sqrt(resid.col(c).squaredNorm() / df));
            sd << '\n';
        }
        write_text_file(cfg.sd_out, sd.str());
    }
    return kExitOk;
}

Json params_json(const TrueParams& params) {
    Json gamma = Json::array();
    for (const auto& g : params.gamma) gamma.push_back(std::vector<double>(g.data(), g.data() + g.size()));
    Json b = Json::array();
    for (Eigen::Index i = 0; i < params.b.rows(); ++i) {
        const Eigen::VectorXd row = params.b.row(i).transpose();
        b.push_back(std::vector<double>(row.data(), row.data() + row.size()));
    }
    return {{"psi", std::vector<double>(params.psi.data(), params.psi.data() + params.psi.size())},
            {"gamma", gamma},
            {"b", b}};
}

int cmd_simulate(const RunConfig& cfg, std::ostream& out, std::ostream&) {
    std::vector<SimOutput> sims;
    if (cfg.example == 1) {
        sims = gen_example1(cfg.seed, cfg.replicates);
    } else if (cfg.example == 2) {
        sims = gen_example2(cfg.seed, cfg.replicates);
    } else {
        const CovariateMatrix q = read_covariates(cfg.covariate_path);
        std::vector<std::string> ids;
        for (int i = 1; i <= cfg.nodes; ++i) ids.push_back(std::to_string(i));
        const Dag truth = read_graph(cfg.graph_path, ids);
        sims.push_back(gen_generic(truth, q, hyperparams(cfg), q.n(), cfg.seed));
    }
    ensure_directory(cfg.out_dir);
    const fs::path dir(cfg.out_dir);
    const SimOutput& first = sims.front();
    write_text_file(dir / "covariates.csv", render([&](std::ostream& os) {
                        write_csv_table(os, first.covariates.names(), first.covariates.values());
                    }));
    write_text_file(dir / "truth.csv", render([&](std::ostream& os) {
                        write_edge_list(os, first.truth, first.data.names());
                    }));
    write_text_file(dir / "params.json", params_json(first.params).dump(2) + "\n");
    for (std::size_t r = 0; r < sims.size(); ++r) {
        char name[32];
        std::snprintf(name, sizeof(name), "data_r%02zu.csv", r + 1);
        write_text_file(dir / name, render([&](std::ostream& os) {
                            write_csv_table(os, sims[r].data.names(), sims[r].data.values());
                        }));
    }
    out << "wrote " << sims.size() << " dataset(s) to " << cfg.out_dir << '\n';
    return kExitOk;
}

int cmd_moralize(const RunConfig& cfg, std::ostream& out, std::ostream&) {
    std::vector<std::string> names;
    if (!cfg.data_path.empty()) {
        names = read_csv_table(cfg.data_path).header;
    } else {
        for (int i = 1; i <= cfg.nodes; ++i) names.push_back(std::to_string(i));
    }
    const Dag dag = read_graph(cfg.graph_path, names);
    const std::string dot = to_dot(moralize(dag), names);
    if (cfg.dot_out.empty()) {
        out << dot;
    } else {
        write_text_file(cfg.dot_out, dot);
    }
    return kExitOk;
}

}  // namespace

void RunConfig::validate() const {
    const bool needs_metric = command == Command::learn || command == Command::score ||
                              command == Command::posterior;
    if (needs_metric) {
        if (data_path.empty()) throw ConstraintError("--data is required");
        if (metric == MetricKind::bge && !covariate_path.empty()) {
            throw ConstraintError("the bge metric does not take --covariates");
        }
        if (metric != MetricKind::bge && covariate_path.empty()) {
            throw ConstraintError("the " + to_string(metric) + " metric requires --covariates");
        }
    }
    if ((command == Command::score || command == Command::posterior ||
         command == Command::moralize) &&
        graph_path.empty()) {
        throw ConstraintError("--graph is required");
    }
    if (command == Command::moralize && data_path.empty() && nodes < 1) {
        throw ConstraintError("moralize needs --data (for names) or --nodes");
    }
    if (command == Command::simulate) {
        if (out_dir.empty()) throw ConstraintError("--out-dir is required");
        if (example != 0 && example != 1 && example != 2) {
            throw ConstraintError("--example must be 1 or 2");
        }
        if (example == 0 && (graph_path.empty() || covariate_path.empty() || nodes < 1)) {
            throw ConstraintError(
                "simulate needs --example, or --graph, --covariates and --nodes for the generic "
                "generator");
        }
        if (replicates < 1) throw ConstraintError("--replicates must be at least 1");
    }
}

int run(const RunConfig& config, std::ostream& out, std::ostream& err) {
    try {
        config.validate();
        switch (config.command) {
            case Command::learn: return cmd_learn(config, out, err);
            case Command::score: return cmd_score(config, out, err);
            case Command::posterior: return cmd_posterior(config, out, err);
            case Command::simulate: return cmd_simulate(config, out, err);
            case Command::moralize: return cmd_moralize(config, out, err);
        }
    } catch (const ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitParse;
    } catch (const ConstraintError& e) {
        err << "error: " << e.what() << '\n';
        return kExitConstraint;
    } catch (const IoError& e) {
        err << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitInternal;
    }
    return kExitInternal;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Gaussian Bayesian network structure learning with covariate adjustment", "covnet"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    RunConfig cfg;
    std::string metric = "bge";

    const auto add_metric = [&](CLI::App* sub) {
        sub->add_option("--data", cfg.data_path, "Data CSV (header row of variable names)");
        sub->add_option("--covariates", cfg.covariate_path, "Covariate CSV, rows aligned with data");
        sub->add_option("--metric", metric, "Score metric")
            ->check(CLI::IsMember({"bge", "bgecm", "residual"}));
        sub->add_option("--tau", cfg.tau, "Prior precision scale")->capture_default_str();
        sub->add_option("--delta", cfg.delta, "Prior degrees of freedom")->capture_default_str();
        sub->add_option("--upsilon", cfg.upsilon, "Covariate-effect precision")->capture_default_str();
        sub->add_flag("--center,!--no-center", cfg.center, "Mean-center columns (bge only)");
        sub->add_option("--edge-penalty", cfg.edge_penalty,
                        "Per-edge prior factor kappa in (0,1]; default uniform prior");
    };

    auto* learn = app.add_subcommand("learn", "Search for the highest-scoring DAG");
    add_metric(learn);
    learn->add_option("--max-parents", cfg.max_parents)->capture_default_str();
    learn->add_option("--restarts", cfg.restarts)->capture_default_str();
    learn->add_option("--seed", cfg.seed)->capture_default_str();
    learn->add_option("--max-iterations", cfg.max_iterations)->capture_default_str();
    learn->add_option("--truth", cfg.truth_path, "Edge list of the true graph for evaluation");
    learn->add_flag("--directed", cfg.directed, "Compare oriented edges instead of skeletons");
    learn->add_option("--edges-out", cfg.edges_out, "Learned DAG edge list (CSV)");
    learn->add_option("--dot-out", cfg.dot_out, "Moral graph (DOT)");
    learn->add_option("--json-out", cfg.json_out, "Report (JSON); stdout when omitted");

    auto* score = app.add_subcommand("score", "Score a given DAG");
    add_metric(score);
    score->add_option("--graph", cfg.graph_path, "Edge list to score");
    score->add_option("--json-out", cfg.json_out, "Report (JSON); stdout when omitted");

    auto* posterior = app.add_subcommand("posterior", "Posterior summaries per node");
    add_metric(posterior);
    posterior->add_option("--graph", cfg.graph_path, "Edge list defining parent sets");
    posterior->add_option("--out", cfg.csv_out, "Posterior CSV; stdout when omitted");
    posterior->add_option("--sd-out", cfg.sd_out,
                          "Per-variable standard deviations and residual standard errors (CSV)");

    auto* simulate = app.add_subcommand("simulate", "Generate simulated datasets");
    simulate->add_option("--example", cfg.example, "Simulation design 1 or 2");
    simulate->add_option("--seed", cfg.seed)->capture_default_str();
    simulate->add_option("--replicates", cfg.replicates)->capture_default_str();
    simulate->add_option("--out-dir", cfg.out_dir, "Output directory");
    simulate->add_option("--graph", cfg.graph_path, "Generic design: true DAG edge list (ids)");
    simulate->add_option("--covariates", cfg.covariate_path, "Generic design: covariate CSV");
    simulate->add_option("--nodes", cfg.nodes, "Generic design: number of variables");
    simulate->add_option("--tau", cfg.tau)->capture_default_str();
    simulate->add_option("--delta", cfg.delta)->capture_default_str();
    simulate->add_option("--upsilon", cfg.upsilon)->capture_default_str();

    auto* moral = app.add_subcommand("moralize", "Moral graph of an edge list as DOT");
    moral->add_option("--graph", cfg.graph_path, "Edge list");
    moral->add_option("--data", cfg.data_path, "Data CSV providing node names");
    moral->add_option("--nodes", cfg.nodes, "Node count when no data file is given");
    moral->add_option("--dot-out", cfg.dot_out, "DOT output; stdout when omitted");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    if (learn->parsed()) cfg.command = Command::learn;
    if (score->parsed()) cfg.command = Command::score;
    if (posterior->parsed()) cfg.command = Command::posterior;
    if (simulate->parsed()) cfg.command = Command::simulate;
    if (moral->parsed()) cfg.command = Command::moralize;
    cfg.metric = metric_kind_from_string(metric);
    return run(cfg, out, err);
}

}  // namespace covnet
