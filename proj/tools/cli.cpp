#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "compare.hpp"
#include "json.hpp"
#include "manifest.hpp"
#include "wdro/io.hpp"
#include "wdro/ope.hpp"
#include "wdro/opl.hpp"
#include "wdro/synth.hpp"
#include "wdro/transport.hpp"

#ifndef WDRO_VERSION
#define WDRO_VERSION "0.0.0"
#endif

namespace wdro::cli {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::Io: return kExitIo;
        case ErrorKind::Numerical: return kExitNumerical;
        default: return kExitValidation;
    }
}

std::string_view version() noexcept { return WDRO_VERSION; }

namespace {

const std::set<std::string> kInputFlags = {"--data", "--config", "--p", "--q", "--spec", "--policy"};
const std::set<std::string> kOutputFlags = {"--out",       "--manifest-out", "--plan-out",
                                            "--trace-out", "--policy-out",   "--table-out"};

struct Globals {
    std::uint64_t seed = 0;
    std::string out;
    std::string manifest_out;
    unsigned threads = 1;
};

/// Collects inputs, outputs and the config snapshot of one command.
class Session {
public:
    explicit Session(std::ostream& out) : out_(out) {}

    json config = json::object();
    std::vector<FileDigest> inputs;
    std::vector<FileDigest> outputs;

    void input(const std::string& role, const fs::path& path) {
        auto abs = fs::absolute(path).lexically_normal();
        inputs.push_back({role, abs.string(), sha256_file(abs)});
    }

    /// Dataset inputs: a canonical sidecar also pulls in its records file.
    void dataset_input(const std::string& role, const fs::path& path) {
        input(role, path);
        if (path.extension() != ".json") return;
        std::ifstream in(path, std::ios::binary);
        try {
            auto j = json::parse(in);
            if (j.contains("records")) input(role + "_records", path.parent_path() / j.at("records").get<std::string>());
        } catch (const json::exception&) {
            // load_canonical reports the malformed sidecar.
        }
    }

    void output_written(const std::string& role, const fs::path& path) {
        auto abs = fs::absolute(path).lexically_normal();
        outputs.push_back({role, abs.string(), sha256_file(abs)});
    }

    /// Writes `text` to `path`, or to the console stream when the path is empty.
    void emit(const std::string& role, const std::string& path, const std::string& text) {
        if (path.empty()) {
            out_ << text;
            return;
        }
        {
            std::ofstream f(path, std::ios::binary);
            if (!f) throw Error(ErrorKind::Io, "cannot write " + path);
            f << text;
            if (!f) throw Error(ErrorKind::Io, "write failed for " + path);
        }
        output_written(role, path);
    }

private:
    std::ostream& out_;
};

std::string r(double v) { return format_real(v); }

std::optional<IngestConfig> maybe_config(Session& s, const std::string& path) {
    if (path.empty()) return std::nullopt;
    s.input("config", path);
    return load_ingest_config(path);
}

BanditDataset load_data(Session& s, const std::string& data, const std::string& config) {
    if (data.empty()) throw Error(ErrorKind::InvalidConfig, "--data is required");
    auto cfg = maybe_config(s, config);
    s.dataset_input("data", data);
    return read_dataset(data, cfg);
}

MethodSpec method_spec(const std::string& name, double eta) {
    MethodSpec m{parse_method(name), eta};
    if (m.kind == Method::Regularized && !(eta > 0.0))
        throw Error(ErrorKind::NonPositiveEta, "--eta must be positive");
    return m;
}

double resolved_tol(double tol, double y_max) { return tol > 0.0 ? tol : 1e-9 * y_max; }

std::size_t action_index(const std::vector<std::string>& labels, const std::string& name) {
    auto it = std::find(labels.begin(), labels.end(), name);
    if (it == labels.end()) throw Error(ErrorKind::InvalidConfig, "unknown action '" + name + "'");
    return static_cast<std::size_t>(it - labels.begin());
}

/// "uniform", "action:<label>", or a CSV whose header lists the action labels and whose
/// rows follow the context support order.
Policy resolve_policy(Session& s, const std::string& spec, std::size_t n_contexts,
                      const std::vector<std::string>& actions) {
    if (spec == "uniform") return uniform_policy(n_contexts, actions.size());
    if (spec.rfind("action:", 0) == 0)
        return deterministic_policy(n_contexts, actions.size(), action_index(actions, spec.substr(7)));
    s.input("policy", spec);
    std::ifstream in(spec, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open policy " + spec);
    auto rows = parse_csv(in);
    if (rows.empty() || rows.front().fields != actions)
        throw Error(ErrorKind::SchemaMismatch, spec + ": header must list the dataset's action labels");
    std::vector<std::vector<double>> probs;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        std::vector<double> row;
        for (const auto& f : rows[i].fields) {
            auto v = apply_bin(BinRule{}, f);
            if (!v) throw Error(ErrorKind::UnparsableRow, spec + ": line " + std::to_string(rows[i].line));
            row.push_back(*v);
        }
        probs.push_back(std::move(row));
    }
    if (probs.size() != n_contexts)
        throw Error(ErrorKind::PolicyContextMismatch, spec + ": " + std::to_string(probs.size()) +
                                                          " rows for " + std::to_string(n_contexts) + " contexts");
    return make_policy(std::move(probs));
}

std::string policy_csv(const Policy& p, const std::vector<std::string>& actions) {
    std::ostringstream os;
    for (std::size_t a = 0; a < actions.size(); ++a) os << (a ? "," : "") << csv_escape(actions[a]);
    os << '\n';
    for (const auto& row : p.probs) {
        for (std::size_t a = 0; a < row.size(); ++a) os << (a ? "," : "") << r(row[a]);
        os << '\n';
    }
    return os.str();
}

// ---- distance -------------------------------------------------------------------------

struct DistanceOpts {
    std::string p, q, config, plan_out;
};

DiscreteDistribution load_law(Session& s, const std::string& path, const std::optional<IngestConfig>& cfg,
                              const std::string& role) {
    if (fs::path(path).extension() == ".json" || cfg) {
        s.dataset_input(role, path);
        return context_distribution(read_dataset(path, cfg));
    }
    s.input(role, path);
    return load_distribution_csv(path);
}

/// KL(Q || P) with both laws re-expressed on the union of their supports.
double kl_on_union(const DiscreteDistribution& p, const DiscreteDistribution& q) {
    std::vector<Point> pts = p.support().points();
    std::vector<double> wp = p.weights(), wq(pts.size(), 0.0);
    if (p.support().dim() != q.support().dim())
        throw Error(ErrorKind::SupportMismatch, "distributions have different dimensions");
    for (std::size_t j = 0; j < q.size(); ++j) {
        auto at = p.support().find(q.support()[j]);
        if (at) {
            wq[*at] += q.weight(j);
        } else {
            pts.push_back(q.support()[j]);
            wp.push_back(0.0);
            wq.push_back(q.weight(j));
        }
    }
    auto u = make_support(std::move(pts), p.support().dim());
    return kl_divergence(make_distribution(u, std::move(wq)), make_distribution(u, std::move(wp)));
}

void cmd_distance(Session& s, const Globals& g, const DistanceOpts& o) {
    auto cfg = maybe_config(s, o.config);
    auto p = load_law(s, o.p, cfg, "p");
    auto q = load_law(s, o.q, cfg, "q");
    s.config = {{"p", o.p}, {"q", o.q}, {"config", o.config}, {"plan_out", o.plan_out}, {"ground_cost", "squared_euclidean"}};
    auto t = wasserstein_distance(p, q);
    const double kl = kl_on_union(p, q);
    s.emit("summary", g.out, "wasserstein,kl\n" + r(t.distance) + "," + r(kl) + "\n");
    if (!o.plan_out.empty()) {
        std::ostringstream os;
        os << "p_index,q_index,mass\n";
        for (std::size_t i = 0; i < t.plan.rows; ++i)
            for (std::size_t j = 0; j < t.plan.cols; ++j)
                if (t.plan(i, j) > 0.0) os << i << ',' << j << ',' << r(t.plan(i, j)) << '\n';
        s.emit("plan", o.plan_out, os.str());
    }
}

// ---- radius ---------------------------------------------------------------------------

struct RadiusOpts {
    std::string data, config;
};

void cmd_radius(Session& s, const Globals& g, const RadiusOpts& o) {
    auto d = load_data(s, o.data, o.config);
    s.config = {{"data", o.data}, {"config", o.config}, {"ground_cost", "squared_euclidean"}};
    std::vector<Point> pts;
    pts.reserve(d.records.size());
    for (const auto& rec : d.records) pts.push_back((*d.contexts)[rec.context]);
    const double radius = split_radius_estimate(pts, g.seed);
    s.emit("summary", g.out, "n,seed,radius\n" + std::to_string(pts.size()) + "," + std::to_string(g.seed) + "," +
                                 r(radius) + "\n");
}

// ---- ope ------------------------------------------------------------------------------

struct OpeOpts {
    std::string data, config, method = "exact", policy = "uniform", table_out;
    double epsilon_x = 0.1, epsilon_c = 0.1, eta = 100.0, tol = 0.0;
    bool impute = false, timing = false;
};

std::string table_csv(const RobustCostTable& t, const std::vector<std::string>& actions) {
    std::ostringstream os;
    os << "context,action,m_hat,imputed\n";
    std::set<std::pair<std::size_t, std::size_t>> imputed(t.imputed.begin(), t.imputed.end());
    for (std::size_t x = 0; x < t.n_contexts; ++x)
        for (std::size_t a = 0; a < t.n_actions; ++a)
            os << x << ',' << csv_escape(actions[a]) << ',' << r(t(x, a)) << ',' << (imputed.count({x, a}) ? 1 : 0)
               << '\n';
    return os.str();
}

void cmd_ope(Session& s, const Globals& g, const OpeOpts& o) {
    const auto start = std::chrono::steady_clock::now();
    auto d = load_data(s, o.data, o.config);
    auto method = method_spec(o.method, o.eta);
    const double tol = resolved_tol(o.tol, d.y_max);
    auto policy = resolve_policy(s, o.policy, d.n_contexts(), d.actions);
    s.config = {{"data", o.data},         {"config", o.config},       {"method", o.method},
                {"eta", o.eta},           {"epsilon_x", o.epsilon_x}, {"epsilon_c", o.epsilon_c},
                {"policy", o.policy},     {"tol", tol},               {"impute_missing_ymax", o.impute},
                {"timing", o.timing},     {"table_out", o.table_out}, {"ground_cost", "squared_euclidean"}};

    auto table = robust_cost_table(d, effective_cost_model(d), o.epsilon_c, method, {tol, g.threads, o.impute});
    auto sol = evaluate_policy(policy, table, context_distribution(d), o.epsilon_x, method, tol);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    std::ostringstream os;
    os << "method,epsilon_x,epsilon_c,eta,value,lambda_star,runtime_s\n"
       << o.method << ',' << r(o.epsilon_x) << ',' << r(o.epsilon_c) << ','
       << (method.kind == Method::Regularized ? r(o.eta) : "") << ',' << r(sol.value) << ',' << r(sol.lambda_star)
       << ',' << (o.timing ? r(secs) : "") << '\n';
    s.emit("summary", g.out, os.str());
    if (!o.table_out.empty()) s.emit("table", o.table_out, table_csv(table, d.actions));
}

// ---- opl ------------------------------------------------------------------------------

struct OplOpts {
    std::string data, config, method = "exact", algo = "bsgd", param = "clamp", schedule = "sqrt";
    std::string trace_out, policy_out;
    std::vector<std::size_t> grouping;
    double epsilon_x = 0.1, epsilon_c = 0.1, eta = 100.0, tol = 0.0;
    std::size_t iterations = 1000, batch = 16, resolution = 101;
    double step = 0.5, lambda0 = 0.0, lambda_cap = 0.0, logit_bound = 8.0;
    bool impute = false;
};

Parameterization parse_param(const std::string& p) {
    if (p == "clamp") return Parameterization::GroupProbClamp;
    if (p == "softmax") return Parameterization::GroupSoftmax;
    throw Error(ErrorKind::InvalidConfig, "--param must be clamp or softmax");
}

void cmd_opl(Session& s, const Globals& g, const OplOpts& o) {
    auto d = load_data(s, o.data, o.config);
    auto method = method_spec(o.method, o.eta);
    const double tol = resolved_tol(o.tol, d.y_max);
    if (o.algo != "bsgd" && o.algo != "grid") throw Error(ErrorKind::InvalidConfig, "--algo must be bsgd or grid");
    if (o.schedule != "sqrt" && o.schedule != "constant")
        throw Error(ErrorKind::InvalidConfig, "--schedule must be sqrt or constant");
    auto grouping = o.grouping.empty() ? identity_grouping(d.n_contexts()) : o.grouping;
    if (grouping.size() != d.n_contexts())
        throw Error(ErrorKind::PolicyContextMismatch, "--grouping needs one group per context");
    auto shape = make_params(grouping, d.n_actions(), parse_param(o.param));
    s.config = {{"data", o.data},           {"config", o.config},         {"method", o.method},
                {"eta", o.eta},             {"epsilon_x", o.epsilon_x},   {"epsilon_c", o.epsilon_c},
                {"algo", o.algo},           {"param", o.param},           {"grouping", grouping},
                {"iterations", o.iterations}, {"batch", o.batch},         {"step", o.step},
                {"schedule", o.schedule},   {"lambda0", o.lambda0},       {"lambda_cap", o.lambda_cap},
                {"resolution", o.resolution}, {"logit_bound", o.logit_bound}, {"tol", tol},
                {"impute_missing_ymax", o.impute}, {"trace_out", o.trace_out}, {"policy_out", o.policy_out}};

    auto table = robust_cost_table(d, effective_cost_model(d), o.epsilon_c, method, {tol, g.threads, o.impute});
    auto ctx = context_distribution(d);

    PolicyParams params;
    std::string objective, lambda, evaluated;
    double value = 0.0;
    if (o.algo == "grid") {
        auto res = exact_opl(table, ctx, o.epsilon_x, method, shape, {o.resolution, o.logit_bound, g.threads, tol});
        params = res.params;
        value = res.value;
        evaluated = std::to_string(res.evaluated);
    } else {
        BsgdConfig cfg;
        cfg.iterations = o.iterations;
        cfg.inner_batch = o.batch;
        cfg.step = o.step;
        cfg.schedule = o.schedule == "sqrt" ? StepSchedule::InverseSqrtT : StepSchedule::Constant;
        cfg.eta = o.eta;
        cfg.epsilon_x = o.epsilon_x;
        cfg.lambda0 = o.lambda0;
        cfg.lambda_cap = o.lambda_cap;
        cfg.seed = g.seed;
        cfg.record_trace = !o.trace_out.empty();
        auto res = bsgd_learn(table, ctx, shape, cfg);
        params = res.params;
        lambda = r(res.lambda);
        objective = r(smoothed_objective(params, res.lambda, table, ctx, o.epsilon_x, o.eta).value);
        value = evaluate_policy(to_policy(params), table, ctx, o.epsilon_x, method, tol).value;
        if (!o.trace_out.empty()) {
            std::ostringstream os;
            os << "t,lambda,context,objective";
            for (std::size_t i = 0; i < params.dim(); ++i) os << ",theta_" << i;
            os << '\n';
            for (const auto& row : res.trace) {
                os << row.t << ',' << r(row.lambda) << ',' << row.context << ',' << r(row.objective);
                for (double t : row.theta) os << ',' << r(t);
                os << '\n';
            }
            s.emit("trace", o.trace_out, os.str());
        }
    }

    std::ostringstream os;
    os << "algo,param,method,epsilon_x,epsilon_c,value,objective,lambda,evaluated";
    for (std::size_t i = 0; i < params.dim(); ++i) os << ",theta_" << i;
    os << '\n'
       << o.algo << ',' << o.param << ',' << o.method << ',' << r(o.epsilon_x) << ',' << r(o.epsilon_c) << ','
       << r(value) << ',' << objective << ',' << lambda << ',' << evaluated;
    for (double t : params.theta) os << ',' << r(t);
    os << '\n';
    s.emit("summary", g.out, os.str());
    if (!o.policy_out.empty()) s.emit("policy", o.policy_out, policy_csv(to_policy(params), d.actions));
}

// ---- compare --------------------------------------------------------------------------

struct CompareOpts {
    std::string spec;
    std::vector<double> radii = {0.8, 1.0, 1.2};
    std::optional<double> outlier_shift;
    double tol = 0.0;
};

void cmd_compare(Session& s, const Globals& g, const CompareOpts& o) {
    CompareSpec spec = generated_compare_spec();
    if (!o.spec.empty()) {
        s.input("spec", o.spec);
        std::ifstream in(o.spec, std::ios::binary);
        if (!in) throw Error(ErrorKind::Io, "cannot open " + o.spec);
        try {
            spec = compare_spec_from_json(json::parse(in));
        } catch (const json::parse_error& e) {
            throw Error(ErrorKind::InvalidConfig, o.spec + ": " + e.what());
        }
    }
    s.config = {{"spec", o.spec.empty() ? json(to_json(spec)) : json(o.spec)},
                {"radii", o.radii},
                {"outlier_shift", o.outlier_shift ? json(*o.outlier_shift) : json(nullptr)},
                {"tol", o.tol}};
    auto res = run_compare(spec, o.radii, o.outlier_shift, o.tol);
    s.emit("summary", g.out, compare_csv(res));
}

// ---- rate -----------------------------------------------------------------------------

struct RateOpts {
    std::size_t contexts = 6, xi = 5, actions = 2, trials = 200, log2_min = 7, log2_max = 14;
    double epsilon_x = 0.1, epsilon_c = 0.1, eta = 100.0;
    std::string method = "exact", policy = "uniform";
    bool no_impute = false;
};

void cmd_rate(Session& s, const Globals& g, const RateOpts& o) {
    if (o.log2_min > o.log2_max || o.log2_max > 40) throw Error(ErrorKind::InvalidConfig, "bad --log2-n range");
    auto gen = benchmark_config(o.contexts, o.xi, o.actions, g.seed);
    auto labels = default_action_labels(o.actions);
    Policy pol = o.policy == "uniform" ? uniform_policy(o.contexts, o.actions)
                 : o.policy.rfind("action:", 0) == 0
                     ? deterministic_policy(o.contexts, o.actions, action_index(labels, o.policy.substr(7)))
                     : throw Error(ErrorKind::InvalidConfig, "--policy must be uniform or action:<label>");
    RateConfig rc(gen, pol);
    rc.epsilon_x = o.epsilon_x;
    rc.epsilon_c = o.epsilon_c;
    rc.method = method_spec(o.method, o.eta);
    for (std::size_t k = o.log2_min; k <= o.log2_max; ++k) rc.n_grid.push_back(std::size_t{1} << k);
    rc.trials = o.trials;
    rc.seed = g.seed;
    rc.threads = g.threads;
    rc.impute_missing_ymax = !o.no_impute;
    s.config = {{"contexts", o.contexts}, {"xi", o.xi},         {"actions", o.actions},
                {"epsilon_x", o.epsilon_x}, {"epsilon_c", o.epsilon_c}, {"method", o.method},
                {"eta", o.eta},           {"policy", o.policy}, {"n_grid", rc.n_grid},
                {"trials", o.trials},     {"impute_missing_ymax", rc.impute_missing_ymax}};
    auto res = rate_experiment(rc);
    std::ostringstream os;
    os << "n,median_error,mean_error,imputed_trials,truth,slope\n";
    for (const auto& p : res.points)
        os << p.n << ',' << r(p.median_error) << ',' << r(p.mean_error) << ',' << p.imputed_trials << ','
           << r(res.truth) << ',' << r(res.slope) << '\n';
    s.emit("summary", g.out, os.str());
}

// ---- synth ----------------------------------------------------------------------------

struct SynthOpts {
    std::size_t contexts = 4, xi = 5, actions = 2, n_train = 1000, n_test = 1000;
    std::vector<double> reweight;
    std::vector<std::size_t> held_out;
    double tilt = 0.0;
    std::string side = "train";
};

json laws_json(const DiscreteDistribution& ctx, const std::vector<DiscreteDistribution>& xi) {
    json x = json::array();
    for (const auto& d : xi) x.push_back(d.weights());
    return {{"contexts", ctx.weights()}, {"xi", x}};
}

void cmd_synth(Session& s, const Globals& g, const SynthOpts& o) {
    if (g.out.empty()) throw Error(ErrorKind::InvalidConfig, "synth needs --out <directory>");
    if (o.side != "train" && o.side != "test") throw Error(ErrorKind::InvalidConfig, "--shift-side must be train or test");
    auto gen = benchmark_config(o.contexts, o.xi, o.actions, g.seed);
    gen.n_train = o.n_train;
    gen.n_test = o.n_test;
    gen.shift.context_reweight = o.reweight;
    gen.shift.held_out_contexts = o.held_out;
    gen.shift.cost_tilt = o.tilt;
    gen.shift.side = o.side == "train" ? ShiftSide::Train : ShiftSide::Test;
    s.config = {{"contexts", o.contexts}, {"xi", o.xi},           {"actions", o.actions},
                {"n_train", o.n_train},   {"n_test", o.n_test},   {"reweight", o.reweight},
                {"held_out", o.held_out}, {"tilt", o.tilt},       {"shift_side", o.side}};
    auto data = synth_generate(gen);

    const fs::path dir = g.out;
    fs::create_directories(dir);
    save_dataset(data.train, dir / "train.json");
    save_dataset(data.test, dir / "test.json");
    json truth = {{"train", laws_json(data.truth.train_contexts, data.truth.train_xi)},
                  {"test", laws_json(data.truth.test_contexts, data.truth.test_xi)}};
    for (auto name : {"train.json", "train.csv", "test.json", "test.csv"}) s.output_written(name, dir / name);
    s.emit("truth", (dir / "truth.json").string(), truth.dump(2) + "\n");
}

// ---- replay ---------------------------------------------------------------------------

struct ReplayOpts {
    std::string manifest, into;
};

int cmd_replay(const Globals& g, const ReplayOpts& o, std::ostream& out, std::ostream& err) {
    auto m = read_manifest(o.manifest);
    for (const auto& in : m.inputs)
        if (sha256_file(in.path) != in.sha256)
            throw Error(ErrorKind::InvalidConfig, "input changed since the run: " + in.path);

    const fs::path into = o.into.empty() ? fs::absolute(o.manifest).parent_path() / "replay" : fs::absolute(o.into);
    fs::create_directories(into);
    auto args = m.args;
    std::vector<std::pair<std::string, std::string>> moved;
    for (std::size_t i = 0; i + 1 < args.size(); ++i) {
        if (!kOutputFlags.count(args[i])) continue;
        auto target = (into / fs::path(args[i + 1]).filename()).string();
        moved.emplace_back(args[i + 1], target);
        args[i + 1] = target;
    }
    std::ostringstream sink;
    if (int code = run(args, sink, err); code != kExitOk) return code;

    auto relocate = [&](const std::string& p) {
        for (const auto& [from, to] : moved) {
            if (p == from) return to;
            if (p.rfind(from + "/", 0) == 0) return to + p.substr(from.size());
        }
        return p;
    };
    std::ostringstream os;
    os << "path,recorded_sha256,replayed_sha256,identical\n";
    bool all = true;
    for (const auto& f : m.outputs) {
        auto path = relocate(f.path);
        auto digest = fs::exists(path) ? sha256_file(path) : std::string("missing");
        const bool same = digest == f.sha256;
        all = all && same;
        os << csv_escape(path) << ',' << f.sha256 << ',' << digest << ',' << (same ? 1 : 0) << '\n';
    }
    if (g.out.empty()) {
        out << os.str();
    } else {
        std::ofstream f(g.out, std::ios::binary);
        if (!f) throw Error(ErrorKind::Io, "cannot write " + g.out);
        f << os.str();
    }
    if (!all) err << "replay: outputs differ from the manifest\n";
    return all ? kExitOk : kExitNumerical;
}

// ---- driver ---------------------------------------------------------------------------

/// Splits --flag=value and makes path arguments absolute so a manifest replays anywhere.
std::vector<std::string> normalized_args(const std::vector<std::string>& in) {
    std::vector<std::string> out;
    for (const auto& a : in) {
        auto eq = a.find('=');
        if (a.rfind("--", 0) == 0 && eq != std::string::npos) {
            out.push_back(a.substr(0, eq));
            out.push_back(a.substr(eq + 1));
        } else {
            out.push_back(a);
        }
    }
    for (std::size_t i = 0; i + 1 < out.size(); ++i) {
        const auto& flag = out[i];
        const bool path_in = kInputFlags.count(flag) && (flag != "--policy" || fs::exists(out[i + 1]));
        if (path_in || kOutputFlags.count(flag)) out[i + 1] = fs::absolute(out[i + 1]).lexically_normal().string();
    }
    return out;
}

std::string utc_now() {
    auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
    Globals g;
    CLI::App app{"Wasserstein distributionally robust off-policy evaluation and learning", "wdro"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_version_flag("--version", std::string(version()));
    app.add_option("--seed", g.seed, "Seed for every random choice");
    app.add_option("--out", g.out, "Output CSV (a directory for synth); stdout when omitted");
    app.add_option("--manifest-out", g.manifest_out, "Run manifest path; defaults next to --out");
    app.add_option("--threads", g.threads, "Worker threads, 0 = hardware concurrency");

    DistanceOpts dist;
    auto* c_dist = app.add_subcommand("distance", "Wasserstein distance and KL(Q || P) between two laws");
    c_dist->add_option("--p", dist.p, "Distribution CSV or dataset")->required();
    c_dist->add_option("--q", dist.q, "Distribution CSV or dataset")->required();
    c_dist->add_option("--config", dist.config, "Ingestion config for raw dataset CSVs");
    c_dist->add_option("--plan-out", dist.plan_out, "Optimal transport plan CSV");

    RadiusOpts rad;
    auto* c_rad = app.add_subcommand("radius", "Split-half Wasserstein radius estimate of the contexts");
    c_rad->add_option("--data", rad.data)->required();
    c_rad->add_option("--config", rad.config);

    OpeOpts ope;
    auto* c_ope = app.add_subcommand("ope", "Robust policy evaluation");
    c_ope->add_option("--data", ope.data)->required();
    c_ope->add_option("--config", ope.config);
    c_ope->add_option("--epsilon-x", ope.epsilon_x, "Context radius")->capture_default_str();
    c_ope->add_option("--epsilon-c", ope.epsilon_c, "Cost radius")->capture_default_str();
    c_ope->add_option("--method", ope.method, "exact|regularized|kl|plugin")->capture_default_str();
    c_ope->add_option("--eta", ope.eta, "Smoothing parameter")->capture_default_str();
    c_ope->add_option("--policy", ope.policy, "uniform, action:<label> or a policy CSV")->capture_default_str();
    c_ope->add_option("--tol", ope.tol, "Solver tolerance, 0 = 1e-9 * y_max");
    c_ope->add_option("--table-out", ope.table_out, "Robust cost table CSV");
    c_ope->add_flag("--impute-missing-ymax", ope.impute, "Use y_max for unobserved pairs");
    c_ope->add_flag("--timing", ope.timing, "Fill the runtime column");

    OplOpts opl;
    auto* c_opl = app.add_subcommand("opl", "Robust policy learning");
    c_opl->add_option("--data", opl.data)->required();
    c_opl->add_option("--config", opl.config);
    c_opl->add_option("--epsilon-x", opl.epsilon_x)->capture_default_str();
    c_opl->add_option("--epsilon-c", opl.epsilon_c)->capture_default_str();
    c_opl->add_option("--method", opl.method, "Cost table and evaluation method")->capture_default_str();
    c_opl->add_option("--eta", opl.eta, "Smoothing parameter")->capture_default_str();
    c_opl->add_option("--algo", opl.algo, "bsgd|grid")->capture_default_str();
    c_opl->add_option("--param", opl.param, "clamp|softmax")->capture_default_str();
    c_opl->add_option("--grouping", opl.grouping, "Group id per context")->delimiter(',');
    c_opl->add_option("--iterations", opl.iterations)->capture_default_str();
    c_opl->add_option("--batch", opl.batch, "Inner batch size")->capture_default_str();
    c_opl->add_option("--step", opl.step)->capture_default_str();
    c_opl->add_option("--schedule", opl.schedule, "sqrt|constant")->capture_default_str();
    c_opl->add_option("--lambda0", opl.lambda0)->capture_default_str();
    c_opl->add_option("--lambda-cap", opl.lambda_cap, "0 = y_max / epsilon_x");
    c_opl->add_option("--resolution", opl.resolution, "Grid points per dimension")->capture_default_str();
    c_opl->add_option("--logit-bound", opl.logit_bound)->capture_default_str();
    c_opl->add_option("--tol", opl.tol);
    c_opl->add_option("--trace-out", opl.trace_out, "Per-iteration BSGD trace CSV");
    c_opl->add_option("--policy-out", opl.policy_out, "Learned policy CSV");
    c_opl->add_flag("--impute-missing-ymax", opl.impute);

    CompareOpts cmp;
    double outlier = 0.0;
    auto* c_cmp = app.add_subcommand("compare", "KL against Wasserstein DRO on a scalar example");
    c_cmp->add_option("--spec", cmp.spec, "JSON spec; the generated example when omitted");
    c_cmp->add_option("--radii", cmp.radii, "Multipliers of the measured distance")->delimiter(',');
    auto* shift_opt = c_cmp->add_option("--outlier-shift", outlier, "Move the top support point here");
    c_cmp->add_option("--tol", cmp.tol);

    RateOpts rate;
    auto* c_rate = app.add_subcommand("rate", "Convergence rate of the estimator on synthetic data");
    c_rate->add_option("--contexts", rate.contexts)->capture_default_str();
    c_rate->add_option("--xi", rate.xi)->capture_default_str();
    c_rate->add_option("--actions", rate.actions)->capture_default_str();
    c_rate->add_option("--epsilon-x", rate.epsilon_x)->capture_default_str();
    c_rate->add_option("--epsilon-c", rate.epsilon_c)->capture_default_str();
    c_rate->add_option("--method", rate.method)->capture_default_str();
    c_rate->add_option("--eta", rate.eta)->capture_default_str();
    c_rate->add_option("--policy", rate.policy, "uniform or action:<label>")->capture_default_str();
    c_rate->add_option("--log2-n-min", rate.log2_min)->capture_default_str();
    c_rate->add_option("--log2-n-max", rate.log2_max)->capture_default_str();
    c_rate->add_option("--trials", rate.trials)->capture_default_str();
    c_rate->add_flag("--no-impute", rate.no_impute, "Fail on unobserved pairs instead of using y_max");

    SynthOpts syn;
    auto* c_syn = app.add_subcommand("synth", "Generate a shifted train/test pair");
    c_syn->add_option("--contexts", syn.contexts)->capture_default_str();
    c_syn->add_option("--xi", syn.xi)->capture_default_str();
    c_syn->add_option("--actions", syn.actions)->capture_default_str();
    c_syn->add_option("--n-train", syn.n_train)->capture_default_str();
    c_syn->add_option("--n-test", syn.n_test)->capture_default_str();
    c_syn->add_option("--reweight", syn.reweight, "Context mass factors")->delimiter(',');
    c_syn->add_option("--held-out", syn.held_out, "Contexts removed from the shifted side")->delimiter(',');
    c_syn->add_option("--tilt", syn.tilt, "Exponential tilt of the cost laws")->capture_default_str();
    c_syn->add_option("--shift-side", syn.side, "train|test")->capture_default_str();

    ReplayOpts rep;
    auto* c_rep = app.add_subcommand("replay", "Re-run a manifest and compare output digests");
    c_rep->add_option("manifest", rep.manifest)->required();
    c_rep->add_option("--into", rep.into, "Directory for replayed outputs");

    auto args = normalized_args(raw_args);
    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (c_rep->parsed()) return cmd_replay(g, rep, out, err);

        const auto started = utc_now();
        const auto t0 = std::chrono::steady_clock::now();
        Session s(out);
        std::string command;
        if (c_dist->parsed()) {
            command = "distance";
            cmd_distance(s, g, dist);
        } else if (c_rad->parsed()) {
            command = "radius";
            cmd_radius(s, g, rad);
        } else if (c_ope->parsed()) {
            command = "ope";
            cmd_ope(s, g, ope);
        } else if (c_opl->parsed()) {
            command = "opl";
            cmd_opl(s, g, opl);
        } else if (c_cmp->parsed()) {
            command = "compare";
            if (shift_opt->count()) cmp.outlier_shift = outlier;
            cmd_compare(s, g, cmp);
        } else if (c_rate->parsed()) {
            command = "rate";
            cmd_rate(s, g, rate);
        } else {
            command = "synth";
            cmd_synth(s, g, syn);
        }

        fs::path manifest = g.manifest_out;
        if (manifest.empty() && !g.out.empty())
            manifest = command == "synth" ? fs::path(g.out) / "manifest.json"
                                          : fs::path(g.out).replace_extension(".manifest.json");
        if (!manifest.empty()) {
            RunManifest m;
            m.version = std::string(version());
            m.command = command;
            m.args = args;
            m.config = s.config;
            m.seed = g.seed;
            m.threads = g.threads;
            m.inputs = s.inputs;
            m.outputs = s.outputs;
            m.started_at = started;
            m.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            write_manifest(m, manifest);
        }
        return kExitOk;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code(e.kind());
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitNumerical;
    }
}

}  // namespace wdro::cli
