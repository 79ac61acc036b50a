// Laboratory driver: synthetic-graph generation, structural-gap estimation,
// unsupervised pretraining, and end-to-end reproduction harnesses.
//
// Contract:
//   * every command is deterministic given its flags — all randomness flows
//     from explicit --seed values (EGI_WORKERS changes wall time only);
//   * every artifact starts with a `# config-hash=` header (or carries a
//     config_hash field) naming the flag set that produced it, so stale
//     artifacts are never silently mixed;
//   * exit codes: 0 success, 1 usage error, 2 data error, 3 reproduction
//     assertion failure.
//
// Graph arguments accept either an edge-list path or a generator spec:
//   ff:n=100,pf=0.4,pb=0.3,seed=3   forest-fire graph
//   ba:n=100,m=2,seed=1             preferential-attachment graph
//   cycle:n=8                       fixed ring (handy for sanity checks)

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "egi/ego.hpp"
#include "egi/eval.hpp"
#include "egi/generators.hpp"
#include "egi/graph.hpp"
#include "egi/model.hpp"
#include "egi/rng.hpp"
#include "egi/spectral.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Flag combinations the parser accepted but the command cannot act on
// (malformed specs, out-of-range values). Reported as usage errors (exit 1),
// unlike data errors (exit 2) from missing or unreadable inputs.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string fmt6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

std::string fmt_signed(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%+.4f", v);
    return buf;
}

std::string num_repr(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string short_num(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

// ---------------------------------------------------------------------------
// Config hashing: FNV-1a over the canonical "command;key=value;..." string.

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex16(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

class ConfigHash {
  public:
    explicit ConfigHash(std::string command) : command_(std::move(command)) {}

    void add(const std::string& key, const std::string& value) { kv_.emplace_back(key, value); }
    void add(const std::string& key, long long value) { add(key, std::to_string(value)); }
    void add(const std::string& key, std::uint64_t value) { add(key, std::to_string(value)); }
    void add(const std::string& key, int value) { add(key, std::to_string(value)); }
    void add(const std::string& key, double value) { add(key, num_repr(value)); }

    std::string hex() const {
        auto kv = kv_;
        std::sort(kv.begin(), kv.end());
        std::string s = command_;
        for (const auto& [k, v] : kv) {
            s += ';';
            s += k;
            s += '=';
            s += v;
        }
        return hex16(fnv1a64(s));
    }

  private:
    std::string command_;
    std::vector<std::pair<std::string, std::string>> kv_;
};

// ---------------------------------------------------------------------------
// Small file helpers.

void write_text(const fs::path& p, const std::string& content) {
    std::error_code ec;
    if (p.has_parent_path()) fs::create_directories(p.parent_path(), ec);
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + p.string());
    f << content;
    f.flush();
    if (!f.good()) throw std::runtime_error("write failed: " + p.string());
}

std::string read_first_line(const fs::path& p) {
    std::ifstream f(p);
    if (!f) return "";
    std::string line;
    std::getline(f, line);
    return line;
}

// ---------------------------------------------------------------------------
// Graph / feature argument parsing.

std::map<std::string, std::string> parse_kv(const std::string& body, const std::string& what) {
    std::map<std::string, std::string> out;
    if (body.empty()) return out;
    std::stringstream ss(body);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw UsageError(what + ": expected key=value, got '" + item + "'");
        }
        out[item.substr(0, eq)] = item.substr(eq + 1);
    }
    return out;
}

void reject_unknown(const std::map<std::string, std::string>& kv,
                    const std::vector<std::string>& allowed, const std::string& what) {
    for (const auto& [k, v] : kv) {
        if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) {
            std::string keys;
            for (const auto& a : allowed) keys += (keys.empty() ? "" : ", ") + a;
            throw UsageError(what + ": unknown key '" + k + "' (allowed: " + keys + ")");
        }
    }
}

long long kv_int(const std::map<std::string, std::string>& kv, const std::string& key,
                 long long def, const std::string& what) {
    auto it = kv.find(key);
    if (it == kv.end()) return def;
    try {
        std::size_t pos = 0;
        const long long v = std::stoll(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw UsageError(what + ": '" + key + "' must be an integer, got '" + it->second + "'");
    }
}

double kv_num(const std::map<std::string, std::string>& kv, const std::string& key, double def,
              const std::string& what) {
    auto it = kv.find(key);
    if (it == kv.end()) return def;
    try {
        std::size_t pos = 0;
        const double v = std::stod(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw UsageError(what + ": '" + key + "' must be a number, got '" + it->second + "'");
    }
}

struct NamedGraph {
    egi::Graph graph;
    std::string name;  // CSV-safe identifier derived from the argument
};

NamedGraph resolve_graph(const std::string& spec) {
    const auto colon = spec.find(':');
    const std::string head = colon == std::string::npos ? spec : spec.substr(0, colon);
    const std::string body = colon == std::string::npos ? "" : spec.substr(colon + 1);

    if (head == "cycle") {
        auto kv = parse_kv(body, spec);
        reject_unknown(kv, {"n"}, spec);
        const int n = static_cast<int>(kv_int(kv, "n", 8, spec));
        if (n < 3) throw UsageError(spec + ": cycle needs n >= 3");
        std::vector<std::pair<int, int>> pairs;
        pairs.reserve(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) pairs.emplace_back(i, (i + 1) % n);
        return {egi::from_edge_list(pairs, false), "cycle-n" + std::to_string(n)};
    }
    if (head == "ff" || head == "ba") {
        auto kv = parse_kv(body, spec);
        egi::GenSpec gs;
        gs.node_count = static_cast<int>(kv_int(kv, "n", 100, spec));
        gs.seed = static_cast<std::uint64_t>(kv_int(kv, "seed", 1, spec));
        std::string name;
        if (head == "ff") {
            reject_unknown(kv, {"n", "pf", "pb", "seed"}, spec);
            gs.family = egi::Family::forest_fire;
            gs.ff_forward = kv_num(kv, "pf", 0.4, spec);
            gs.ff_backward = kv_num(kv, "pb", 0.3, spec);
            name = "ff-n" + std::to_string(gs.node_count) + "-pf" + short_num(gs.ff_forward) +
                   "-pb" + short_num(gs.ff_backward) + "-s" + std::to_string(gs.seed);
        } else {
            reject_unknown(kv, {"n", "m", "seed"}, spec);
            gs.family = egi::Family::barabasi;
            gs.ba_m = static_cast<int>(kv_int(kv, "m", 2, spec));
            name = "ba-n" + std::to_string(gs.node_count) + "-m" + std::to_string(gs.ba_m) + "-s" +
                   std::to_string(gs.seed);
        }
        try {
            return {egi::generate(gs), name};
        } catch (const std::invalid_argument& e) {
            throw UsageError(spec + ": " + e.what());
        }
    }
    // Anything else is a path to an edge-list file.
    egi::EdgeListFile f = egi::load_edge_list(spec);
    return {egi::from_edge_list(f.pairs, false), fs::path(spec).stem().string()};
}

struct FeatureSpec {
    std::string kind = "degree";
    int dim = 3;

    std::string text() const { return kind + ":" + std::to_string(dim); }
};

FeatureSpec parse_feature(const std::string& s) {
    const auto colon = s.find(':');
    if (colon == std::string::npos || colon + 1 == s.size()) {
        throw UsageError("feature spec must be kind:dim (e.g. degree:3), got '" + s + "'");
    }
    FeatureSpec fspec;
    fspec.kind = s.substr(0, colon);
    if (fspec.kind != "degree" && fspec.kind != "constant" && fspec.kind != "random") {
        throw UsageError("unknown feature kind '" + fspec.kind +
                         "' (expected degree, constant, or random)");
    }
    try {
        std::size_t pos = 0;
        fspec.dim = std::stoi(s.substr(colon + 1), &pos);
        if (pos != s.size() - colon - 1) throw std::invalid_argument("");
    } catch (...) {
        throw UsageError("feature dim must be an integer in '" + s + "'");
    }
    if (fspec.dim < 1) throw UsageError("feature dim must be >= 1");
    return fspec;
}

egi::FeatureMatrix build_features(const FeatureSpec& fspec, const egi::Graph& g,
                                  std::uint64_t seed) {
    if (fspec.kind == "degree") return egi::degree_onehot(g, fspec.dim);
    if (fspec.kind == "constant") return egi::constant_features(g, fspec.dim);
    return egi::random_features(g, fspec.dim, seed);
}

// Seed tag for feature randomness, one stream per graph index.
constexpr std::uint64_t kFeatureTag = 0xFEA7;
// Seed tag for gap-estimation streams.
constexpr std::uint64_t kGapTag = 0x6A9;
// Seed tag for evaluation (classifier splits/initializations).
constexpr std::uint64_t kEvalTag = 0xE7A1;

// ---------------------------------------------------------------------------
// Checkpoint reuse: a completed pretraining checkpoint is adopted only when
// the config hash recorded beside it matches the current flags.

egi::ModelParams pretrain_or_resume(const egi::Graph& g, const egi::FeatureMatrix& feats,
                                    const egi::TrainConfig& cfg, const fs::path& ckpt,
                                    const std::string& hash) {
    const fs::path hashfile = ckpt.string() + ".confighash";
    if (fs::exists(ckpt) && read_first_line(hashfile) == hash) {
        std::cerr << "  reusing checkpoint " << ckpt.string() << "\n";
        return egi::load_checkpoint(ckpt.string()).model;
    }
    egi::TrainResult res = egi::train(g, feats, cfg);
    if (ckpt.has_parent_path()) fs::create_directories(ckpt.parent_path());
    egi::save_checkpoint(ckpt.string(), cfg, res.model);
    write_text(hashfile, hash + "\n");
    std::cerr << "  trained " << res.loss_trace.size() << " epochs, final loss "
              << (res.loss_trace.empty() ? std::string("n/a") : fmt6(res.loss_trace.back()))
              << "\n";
    return std::move(res.model);
}

struct SuiteSummary {
    double acc = 0.0;
    double base = 0.0;
    double gap = 0.0;
    int gap_records = 0;
};

SuiteSummary summarize(const egi::TransferReport& report) {
    SuiteSummary s;
    for (const auto& r : report.records) {
        s.acc += r.acc_mean;
        s.base += r.baseline_mean;
        if (r.has_gap) {
            s.gap += r.gap.value;
            s.gap_records += 1;
        }
    }
    const auto n = static_cast<double>(report.records.size());
    if (n > 0) {
        s.acc /= n;
        s.base /= n;
    }
    if (s.gap_records > 0) s.gap /= static_cast<double>(s.gap_records);
    return s;
}

struct Assertion {
    std::string name;
    bool passed = false;
    std::string detail;
};

bool print_assertions(const std::vector<Assertion>& asserts) {
    bool all = true;
    for (const auto& a : asserts) {
        std::cout << "  assertion " << a.name << ": " << (a.passed ? "PASS" : "FAIL") << " ("
                  << a.detail << ")\n";
        all = all && a.passed;
    }
    return all;
}

// ---------------------------------------------------------------------------
// generate

int cmd_generate(const std::string& family, int n, int count, std::uint64_t seed, int m, double pf,
                 double pb, const std::string& out_dir) {
    egi::Family fam;
    if (family == "ff") {
        fam = egi::Family::forest_fire;
    } else if (family == "ba") {
        fam = egi::Family::barabasi;
    } else {
        throw UsageError("--family must be ff or ba, got '" + family + "'");
    }
    if (count < 1) throw UsageError("--count must be >= 1");

    ConfigHash ch("generate");
    ch.add("family", family);
    ch.add("n", n);
    ch.add("count", count);
    ch.add("seed", seed);
    if (fam == egi::Family::forest_fire) {
        ch.add("pf", pf);
        ch.add("pb", pb);
    } else {
        ch.add("m", m);
    }
    const std::string hash = ch.hex();

    egi::GenSpec gs;
    gs.family = fam;
    gs.node_count = n;
    gs.ba_m = m;
    gs.ff_forward = pf;
    gs.ff_backward = pb;
    std::vector<egi::Graph> suite;
    try {
        suite = egi::generate_suite(fam, count, gs, seed);
    } catch (const std::invalid_argument& e) {
        throw UsageError(std::string("generator parameters: ") + e.what());
    }

    const fs::path dir(out_dir);
    json files = json::array();
    for (int i = 0; i < count; ++i) {
        const egi::Graph& g = suite[static_cast<std::size_t>(i)];
        char idx[16];
        std::snprintf(idx, sizeof(idx), "%03d", i);
        const std::string filename = family + "_" + idx + ".edgelist";
        std::string content = "# config-hash=" + hash + "\n# family=" + family +
                              " seed=" + std::to_string(seed + static_cast<std::uint64_t>(i)) +
                              "\n";
        for (const auto& [u, v] : g.edges) {
            if (u < v) content += std::to_string(u) + " " + std::to_string(v) + "\n";
        }
        write_text(dir / filename, content);
        files.push_back({{"file", filename},
                         {"seed", seed + static_cast<std::uint64_t>(i)},
                         {"nodes", g.node_count},
                         {"edges", g.undirected_edge_count()}});
    }

    json manifest;
    manifest["command"] = "generate";
    manifest["config_hash"] = hash;
    manifest["family"] = family;
    manifest["n"] = n;
    manifest["count"] = count;
    manifest["base_seed"] = seed;
    if (fam == egi::Family::forest_fire) {
        manifest["params"] = {{"pf", pf}, {"pb", pb}};
    } else {
        manifest["params"] = {{"m", m}};
    }
    manifest["graphs"] = files;
    write_text(dir / "manifest.json", manifest.dump(2) + "\n");

    std::cout << "wrote " << count << " graphs + manifest.json to " << out_dir << " (config "
              << hash << ")\n";
    return 0;
}

// ---------------------------------------------------------------------------
// gap

int cmd_gap(const std::string& source, const std::string& target, int k, long long pairs,
            std::uint64_t seed, int repeats, int cap, const std::string& out) {
    if (k < 1) throw UsageError("--k must be >= 1");
    if (pairs < 0) throw UsageError("--pairs must be >= 0 (0 = full enumeration)");
    if (repeats < 1) throw UsageError("--repeats must be >= 1");
    if (cap < 1) throw UsageError("--cap must be >= 1");

    ConfigHash ch("gap");
    ch.add("source", source);
    ch.add("target", target);
    ch.add("k", k);
    ch.add("pairs", static_cast<long long>(pairs));
    ch.add("seed", seed);
    ch.add("repeats", repeats);
    ch.add("cap", cap);

    const NamedGraph a = resolve_graph(source);
    const NamedGraph b = resolve_graph(target);

    egi::GapEstimate est;
    if (pairs == 0) {
        est = egi::egi_gap_full(a.graph, b.graph, k, cap);
    } else if (repeats <= 1) {
        est = egi::egi_gap_sampled(a.graph, b.graph, k, static_cast<long>(pairs), seed, cap);
    } else {
        est = egi::egi_gap_repeated(a.graph, b.graph, k, static_cast<long>(pairs), seed, repeats,
                                    cap);
    }

    std::string csv = "# config-hash=" + ch.hex() + "\nsource,target,k,pairs,mean,std\n";
    csv += a.name + "," + b.name + "," + std::to_string(k) + "," + std::to_string(est.pairs_used) +
           "," + fmt6(est.value) + "," + fmt6(est.dispersion) + "\n";
    if (out.empty()) {
        std::cout << csv;
    } else {
        write_text(out, csv);
        std::cerr << "wrote " << out << "\n";
    }
    return 0;
}

// ---------------------------------------------------------------------------
// pretrain

int cmd_pretrain(const std::string& graph_spec, const std::string& feature, int k, int epochs,
                 double lr, int hidden, int cap, int batch, std::uint64_t seed,
                 const std::string& out_dir) {
    const FeatureSpec fspec = parse_feature(feature);
    ConfigHash ch("pretrain");
    ch.add("graph", graph_spec);
    ch.add("feature", fspec.text());
    ch.add("k", k);
    ch.add("epochs", epochs);
    ch.add("lr", lr);
    ch.add("hidden", hidden);
    ch.add("cap", cap);
    ch.add("batch", batch);
    ch.add("seed", seed);
    const std::string hash = ch.hex();

    const NamedGraph g = resolve_graph(graph_spec);
    const egi::FeatureMatrix feats =
        build_features(fspec, g.graph, egi::derive_seed(seed, kFeatureTag));
    const egi::TrainConfig cfg{k, hidden, lr, batch, epochs, cap, seed};

    std::cerr << "pretraining on " << g.name << " (" << g.graph.node_count << " nodes)...\n";
    egi::TrainResult res = egi::train(g.graph, feats, cfg);

    const fs::path dir(out_dir);
    fs::create_directories(dir);
    const fs::path ckpt = dir / "checkpoint.json";
    egi::save_checkpoint(ckpt.string(), cfg, res.model);
    write_text(fs::path(ckpt.string() + ".confighash"), hash + "\n");

    std::string trace = "# config-hash=" + hash + "\nepoch,mean_loss\n";
    for (std::size_t e = 0; e < res.loss_trace.size(); ++e) {
        trace += std::to_string(e) + "," + fmt6(res.loss_trace[e]) + "\n";
    }
    write_text(dir / "loss_trace.csv", trace);

    json manifest;
    manifest["command"] = "pretrain";
    manifest["config_hash"] = hash;
    manifest["graph"] = g.name;
    manifest["graph_arg"] = graph_spec;
    manifest["feature"] = fspec.text();
    manifest["seed"] = seed;
    manifest["epochs_requested"] = epochs;
    manifest["epochs_run"] = res.loss_trace.size();
    if (!res.loss_trace.empty()) manifest["final_loss"] = res.loss_trace.back();
    manifest["files"] = {{"checkpoint", "checkpoint.json"}, {"loss_trace", "loss_trace.csv"}};
    write_text(dir / "manifest.json", manifest.dump(2) + "\n");

    std::cout << "pretrained on " << g.name << ": " << res.loss_trace.size()
              << " epochs, final loss "
              << (res.loss_trace.empty() ? std::string("n/a") : fmt6(res.loss_trace.back()))
              << "; artifacts in " << out_dir << " (config " << hash << ")\n";
    return 0;
}

// ---------------------------------------------------------------------------
// repro synthetic: pretrain on one forest-fire and one preferential-attachment
// graph, evaluate both encoders frozen on the held-out forest-fire graphs,
// and check positive transfer plus the feature-gating behaviour.

int cmd_repro_synthetic(const std::string& feature, int k, int epochs, double lr, int hidden,
                        int cap, std::uint64_t seed, long long pairs, const std::string& out_dir) {
    const FeatureSpec fspec = parse_feature(feature.empty() ? "degree:3" : feature);
    if (pairs < 0) pairs = 150;

    ConfigHash ch("repro-synthetic");
    ch.add("feature", fspec.text());
    ch.add("k", k);
    ch.add("epochs", epochs);
    ch.add("lr", lr);
    ch.add("hidden", hidden);
    ch.add("cap", cap);
    ch.add("seed", seed);
    ch.add("pairs", pairs);
    const std::string hash = ch.hex();
    std::cout << "repro synthetic (config " << hash << ")\n";

    constexpr int kSuite = 40;
    egi::GenSpec ff;
    ff.family = egi::Family::forest_fire;
    ff.node_count = 100;
    ff.ff_forward = 0.4;
    ff.ff_backward = 0.3;
    egi::GenSpec ba;
    ba.family = egi::Family::barabasi;
    ba.node_count = 100;
    ba.ba_m = 2;
    std::cerr << "generating " << kSuite << "+" << kSuite << " graphs...\n";
    const auto FF = egi::generate_suite(egi::Family::forest_fire, kSuite, ff, seed);
    const auto BA = egi::generate_suite(egi::Family::barabasi, kSuite, ba, seed + 100);

    // Held-out targets: every forest-fire graph except the pretraining source.
    std::vector<egi::EvalTarget> targets;
    for (int j = 1; j < kSuite; ++j) {
        egi::EvalTarget t;
        t.name = "ff-" + std::to_string(j);
        t.graph = FF[static_cast<std::size_t>(j)];
        t.feats = build_features(fspec, t.graph,
                                 egi::derive_seed(seed, kFeatureTag, static_cast<std::uint64_t>(j)));
        t.labels = egi::wl_labels(t.graph, k);
        t.use_mlp = false;
        targets.push_back(std::move(t));
    }

    const egi::TrainConfig cfg{k, hidden, lr, 32, epochs, cap, seed};
    const fs::path dir(out_dir);
    fs::create_directories(dir);

    struct SourceRun {
        std::string label;
        egi::TransferReport report;
        SuiteSummary summary;
    };
    std::vector<SourceRun> runs;
    const std::array<std::pair<std::string, const egi::Graph*>, 2> sources = {
        {{"F", &FF[0]}, {"B", &BA[0]}}};
    for (std::size_t si = 0; si < sources.size(); ++si) {
        const auto& [label, src] = sources[si];
        // Feature stream indices: forest-fire graphs use their suite index,
        // the preferential-attachment source uses index 100.
        const std::uint64_t fseed =
            egi::derive_seed(seed, kFeatureTag, si == 0 ? 0ULL : 100ULL);
        const egi::FeatureMatrix src_feats = build_features(fspec, *src, fseed);

        std::cerr << "pretraining source " << label << "...\n";
        egi::ModelParams model = pretrain_or_resume(
            *src, src_feats, cfg, dir / ("checkpoint_" + label + ".json"), hash);

        egi::EvalOptions opts;
        opts.attach_gaps = true;
        opts.gap_pairs = static_cast<long>(pairs);
        opts.gap_seed = egi::derive_seed(seed, kGapTag, si);
        opts.gap_cap = cap;
        std::cerr << "evaluating " << targets.size() << " targets from source " << label
                  << "...\n";
        SourceRun run;
        run.label = label;
        run.report = egi::evaluate_transfer(label, *src, model, targets, cfg, opts);
        run.summary = summarize(run.report);
        runs.push_back(std::move(run));
    }

    const SuiteSummary& sF = runs[0].summary;
    const SuiteSummary& sB = runs[1].summary;
    const double gainF = sF.acc - sF.base;
    const double delta_acc = sF.acc - sB.acc;

    for (const auto& run : runs) {
        write_text(dir / ("report_" + run.label + ".csv"),
                   "# config-hash=" + hash + "\n" +
                       egi::report_csv("synthetic", fspec.text(), k, run.report));
        write_text(dir / ("gap_gain_" + run.label + ".csv"),
                   "# config-hash=" + hash + "\n" + egi::gap_gain_table(run.report));
    }

    std::string summary = "# config-hash=" + hash + "\n";
    summary += "source,targets,feature,k,acc,acc_untrained,gain,delta_acc,gap\n";
    summary += "F,ff-suite," + fspec.text() + "," + std::to_string(k) + "," + fmt6(sF.acc) + "," +
               fmt6(sF.base) + "," + fmt6(gainF) + "," + fmt6(delta_acc) + "," + fmt6(sF.gap) +
               "\n";
    summary += "B,ff-suite," + fspec.text() + "," + std::to_string(k) + "," + fmt6(sB.acc) + "," +
               fmt6(sB.base) + "," + fmt6(sB.acc - sB.base) + "," + fmt6(-delta_acc) + "," +
               fmt6(sB.gap) + "\n";
    write_text(dir / "summary.csv", summary);

    std::cout << "  acc(F->F) " << fmt6(sF.acc) << "   untrained " << fmt6(sF.base) << "   gain "
              << fmt_signed(gainF) << "\n";
    std::cout << "  acc(B->F) " << fmt6(sB.acc) << "   delta_acc " << fmt_signed(delta_acc)
              << "\n";
    std::cout << "  gap(F,F) " << fmt6(sF.gap) << "   gap(B,F) " << fmt6(sB.gap) << "\n";

    std::vector<Assertion> asserts;
    if (fspec.kind == "degree") {
        asserts.push_back({"positive-transfer-gain", gainF >= 0.05,
                           "gain " + fmt_signed(gainF) + " vs >= 0.05"});
        asserts.push_back({"source-separation", delta_acc > 0.0,
                           "delta_acc " + fmt_signed(delta_acc) + " vs > 0"});
    } else if (fspec.kind == "constant") {
        asserts.push_back({"no-separation-without-structure", std::fabs(delta_acc) < 0.05,
                           "|delta_acc| " + fmt6(std::fabs(delta_acc)) + " vs < 0.05"});
        asserts.push_back({"no-gain-without-structure", gainF <= 0.05,
                           "gain " + fmt_signed(gainF) + " vs <= 0.05"});
    }
    const bool ok = print_assertions(asserts);

    json manifest;
    manifest["command"] = "repro";
    manifest["experiment"] = "synthetic";
    manifest["config_hash"] = hash;
    manifest["seed"] = seed;
    manifest["feature"] = fspec.text();
    manifest["k"] = k;
    manifest["epochs"] = epochs;
    manifest["gap_pairs"] = pairs;
    manifest["suites"] = {{"count", kSuite},
                          {"ff_base_seed", seed},
                          {"ba_base_seed", seed + 100}};
    manifest["measured"] = {{"acc_F", sF.acc},        {"acc_B", sB.acc},
                            {"untrained", sF.base},   {"gain_F", gainF},
                            {"delta_acc", delta_acc}, {"gap_FF", sF.gap},
                            {"gap_BF", sB.gap}};
    json ja = json::object();
    for (const auto& a : asserts) ja[a.name] = a.passed;
    manifest["assertions"] = ja;
    manifest["files"] = {"summary.csv", "report_F.csv", "report_B.csv", "gap_gain_F.csv",
                         "gap_gain_B.csv", "checkpoint_F.json", "checkpoint_B.json"};
    write_text(dir / "manifest.json", manifest.dump(2) + "\n");

    std::cout << "  artifacts in " << out_dir << "\n";
    return ok ? 0 : 3;
}

// ---------------------------------------------------------------------------
// repro airport: pretrain on the Europe flight network, evaluate the frozen
// encoder's embeddings on Europe/USA/Brazil with the replicated classifier.

int cmd_repro_airport(const std::string& feature, int k, int epochs, double lr, int hidden,
                      int cap, std::uint64_t seed, long long pairs, int runs,
                      const std::string& data_dir, const std::string& out_dir) {
    const FeatureSpec fspec = parse_feature(feature.empty() ? "degree:10" : feature);
    if (pairs < 0) pairs = 1000;
    if (runs < 1) throw UsageError("--runs must be >= 1");

    ConfigHash ch("repro-airport");
    ch.add("feature", fspec.text());
    ch.add("k", k);
    ch.add("epochs", epochs);
    ch.add("lr", lr);
    ch.add("hidden", hidden);
    ch.add("cap", cap);
    ch.add("seed", seed);
    ch.add("pairs", pairs);
    ch.add("runs", runs);
    ch.add("data", data_dir);
    const std::string hash = ch.hex();
    std::cout << "repro airport (config " << hash << ")\n";

    const std::array<std::string, 3> names = {"europe", "usa", "brazil"};
    for (const auto& n : names) {
        const fs::path edges = fs::path(data_dir) / (n + "-airports.edgelist");
        const fs::path labels = fs::path(data_dir) / ("labels-" + n + "-airports.txt");
        if (!fs::exists(edges) || !fs::exists(labels)) {
            throw std::runtime_error(
                "airport dataset not found under '" + data_dir + "': expected " +
                edges.filename().string() + " and " + labels.filename().string() +
                ". Download the flight-network node-classification files (the "
                "struc2vec release datasets) and place them there; see README.md.");
        }
    }

    std::cerr << "loading datasets...\n";
    std::vector<egi::Dataset> data;
    for (const auto& n : names) {
        data.push_back(
            egi::load_airport((fs::path(data_dir) / (n + "-airports.edgelist")).string(),
                              (fs::path(data_dir) / ("labels-" + n + "-airports.txt")).string()));
    }

    std::vector<egi::EvalTarget> targets;
    for (std::size_t i = 0; i < names.size(); ++i) {
        egi::EvalTarget t;
        t.name = names[i];
        t.graph = data[i].graph;
        t.feats = build_features(fspec, t.graph, egi::derive_seed(seed, kFeatureTag, i));
        t.labels = data[i].graph.labels;
        t.use_mlp = true;
        targets.push_back(std::move(t));
    }

    const egi::TrainConfig cfg{k, hidden, lr, 32, epochs, cap, seed};
    const fs::path dir(out_dir);
    fs::create_directories(dir);

    std::cerr << "pretraining on europe (" << data[0].graph.node_count << " nodes)...\n";
    egi::ModelParams model = pretrain_or_resume(data[0].graph, targets[0].feats, cfg,
                                                dir / "checkpoint_europe.json", hash);

    egi::EvalOptions opts;
    opts.mlp_runs = runs;
    opts.eval_seed = egi::derive_seed(seed, kEvalTag);
    opts.attach_gaps = true;
    opts.gap_pairs = static_cast<long>(pairs);
    opts.gap_seed = egi::derive_seed(seed, kGapTag);
    opts.gap_cap = cap;

    std::cerr << "evaluating frozen embeddings (" << runs << " classifier runs per target)...\n";
    const egi::TransferReport report =
        egi::evaluate_transfer("europe", data[0].graph, model, targets, cfg, opts);

    write_text(dir / "report.csv",
               "# config-hash=" + hash + "\n" + egi::report_csv("airport", fspec.text(), k, report));
    write_text(dir / "gap_gain.csv",
               "# config-hash=" + hash + "\n" + egi::gap_gain_table(report));

    std::vector<Assertion> asserts;
    for (const auto& r : report.records) {
        std::cout << "  " << r.target << ": acc " << fmt6(r.acc_mean) << " +- " << fmt6(r.acc_std)
                  << "   untrained " << fmt6(r.baseline_mean) << " +- " << fmt6(r.baseline_std);
        if (r.has_gap) std::cout << "   gap " << fmt6(r.gap.value);
        std::cout << "\n";
        asserts.push_back({"pretrained-not-worse-" + r.target, r.acc_mean >= r.baseline_mean,
                           fmt6(r.acc_mean) + " vs untrained " + fmt6(r.baseline_mean)});
    }
    for (const auto& r : report.records) {
        if (r.target == "usa" || r.target == "brazil") {
            asserts.push_back({"positive-transfer-" + r.target, r.acc_mean > r.baseline_mean,
                               "gain " + fmt_signed(r.acc_mean - r.baseline_mean) + " vs > 0"});
        }
    }
    const bool ok = print_assertions(asserts);

    json manifest;
    manifest["command"] = "repro";
    manifest["experiment"] = "airport";
    manifest["config_hash"] = hash;
    manifest["seed"] = seed;
    manifest["feature"] = fspec.text();
    manifest["k"] = k;
    manifest["epochs"] = epochs;
    manifest["gap_pairs"] = pairs;
    manifest["runs"] = runs;
    json measured = json::object();
    for (const auto& r : report.records) {
        measured[r.target] = {{"acc_mean", r.acc_mean},
                              {"acc_std", r.acc_std},
                              {"untrained_mean", r.baseline_mean},
                              {"untrained_std", r.baseline_std}};
        if (r.has_gap) measured[r.target]["gap"] = r.gap.value;
    }
    manifest["measured"] = measured;
    json ja = json::object();
    for (const auto& a : asserts) ja[a.name] = a.passed;
    manifest["assertions"] = ja;
    manifest["files"] = {"report.csv", "gap_gain.csv", "checkpoint_europe.json"};
    write_text(dir / "manifest.json", manifest.dump(2) + "\n");

    std::cout << "  artifacts in " << out_dir << "\n";
    return ok ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "ego-graph information laboratory: graph generation, structural-gap estimation,\n"
        "unsupervised pretraining, and reproduction harnesses"};
    app.require_subcommand(1);

    // generate
    std::string g_family;
    int g_n = 100, g_count = 1, g_m = 2;
    double g_pf = 0.4, g_pb = 0.3;
    std::uint64_t g_seed = 1;
    std::string g_out = "out/generated";
    auto* gen = app.add_subcommand("generate", "Generate a suite of synthetic graphs");
    gen->add_option("--family", g_family, "graph family: ff | ba")->required();
    gen->add_option("--n", g_n, "nodes per graph (default 100)");
    gen->add_option("--count", g_count, "number of graphs (default 1)");
    gen->add_option("--seed", g_seed, "base seed; graph i uses seed+i (default 1)");
    gen->add_option("--m", g_m, "edges per new node, ba only (default 2)");
    gen->add_option("--pf", g_pf, "forward burning probability, ff only (default 0.4)");
    gen->add_option("--pb", g_pb, "backward burning ratio, ff only (default 0.3)");
    gen->add_option("--out", g_out, "output directory (default out/generated)");

    // gap
    std::string p_source, p_target, p_out;
    int p_k = 2, p_repeats = 1, p_cap = 10;
    long long p_pairs = 0;
    std::uint64_t p_seed = 17;
    auto* gap = app.add_subcommand(
        "gap", "Estimate the structural gap between two graphs (CSV: source,target,k,pairs,mean,std)");
    gap->add_option("--source", p_source, "edge-list path or generator spec (ff:.., ba:.., cycle:..)")
        ->required();
    gap->add_option("--target", p_target, "edge-list path or generator spec")->required();
    gap->add_option("--k", p_k, "hop count (default 2)");
    gap->add_option("--pairs", p_pairs, "sampled center pairs; 0 = full enumeration (default 0)");
    gap->add_option("--seed", p_seed, "sampling seed (default 17)");
    gap->add_option("--repeats", p_repeats,
                    "repetitions of the sampled estimator for a std estimate; ignored for full "
                    "enumeration (default 1)");
    gap->add_option("--cap", p_cap, "per-node neighbor cap during ego sampling (default 10)");
    gap->add_option("--out", p_out, "output CSV path (default: stdout)");

    // pretrain
    std::string t_graph, t_feature = "degree:3", t_out = "out/pretrain";
    int t_k = 2, t_epochs = 100, t_hidden = 32, t_cap = 10, t_batch = 32;
    double t_lr = 0.01;
    std::uint64_t t_seed = 1;
    auto* pre = app.add_subcommand("pretrain",
                                   "Train the encoder unsupervised on one graph; writes a "
                                   "checkpoint and a loss trace");
    pre->add_option("--graph", t_graph, "edge-list path or generator spec")->required();
    pre->add_option("--feature", t_feature,
                    "node features: degree:d | constant:d | random:d (default degree:3)");
    pre->add_option("--k", t_k, "ego hop count (default 2)");
    pre->add_option("--epochs", t_epochs, "max training epochs (default 100)");
    pre->add_option("--lr", t_lr, "learning rate (default 0.01)");
    pre->add_option("--hidden", t_hidden, "hidden width (default 32)");
    pre->add_option("--cap", t_cap, "per-node neighbor cap during ego sampling (default 10)");
    pre->add_option("--batch", t_batch, "batch size (default 32)");
    pre->add_option("--seed", t_seed, "training seed (default 1)");
    pre->add_option("--out", t_out, "output directory (default out/pretrain)");

    // repro
    std::string r_experiment, r_feature, r_data = "data/airport", r_out;
    int r_k = 2, r_epochs = 100, r_hidden = 32, r_cap = 10, r_runs = 100;
    double r_lr = 0.01;
    long long r_pairs = -1;
    std::uint64_t r_seed = 1;
    auto* rep = app.add_subcommand("repro",
                                   "Run a full reproduction pipeline (generate/load, pretrain, "
                                   "frozen transfer eval, gap attach); exit 3 if its assertions "
                                   "fail");
    rep->add_option("experiment", r_experiment, "synthetic | airport")
        ->required()
        ->check(CLI::IsMember({"synthetic", "airport"}));
    rep->add_option("--feature", r_feature,
                    "node features (default: degree:3 synthetic, degree:10 airport)");
    rep->add_option("--k", r_k, "ego hop count (default 2)");
    rep->add_option("--epochs", r_epochs, "max training epochs (default 100)");
    rep->add_option("--lr", r_lr, "learning rate (default 0.01)");
    rep->add_option("--hidden", r_hidden, "hidden width (default 32)");
    rep->add_option("--cap", r_cap, "neighbor cap (default 10)");
    rep->add_option("--seed", r_seed, "master seed (default 1)");
    rep->add_option("--pairs", r_pairs,
                    "sampled center pairs per gap estimate; 0 = full enumeration (default: 150 "
                    "synthetic, 1000 airport)");
    rep->add_option("--runs", r_runs, "classifier runs per target, airport only (default 100)");
    rep->add_option("--data", r_data, "airport dataset directory (default data/airport)");
    rep->add_option("--out", r_out, "output directory (default out/<experiment>)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (gen->parsed()) {
            return cmd_generate(g_family, g_n, g_count, g_seed, g_m, g_pf, g_pb, g_out);
        }
        if (gap->parsed()) {
            return cmd_gap(p_source, p_target, p_k, p_pairs, p_seed, p_repeats, p_cap, p_out);
        }
        if (pre->parsed()) {
            return cmd_pretrain(t_graph, t_feature, t_k, t_epochs, t_lr, t_hidden, t_cap, t_batch,
                                t_seed, t_out);
        }
        if (rep->parsed()) {
            if (r_experiment == "synthetic") {
                return cmd_repro_synthetic(r_feature, r_k, r_epochs, r_lr, r_hidden, r_cap, r_seed,
                                           r_pairs, r_out.empty() ? "out/synthetic" : r_out);
            }
            return cmd_repro_airport(r_feature, r_k, r_epochs, r_lr, r_hidden, r_cap, r_seed,
                                     r_pairs, r_runs, r_data,
                                     r_out.empty() ? "out/airport" : r_out);
        }
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
