#include "commands.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "llae/csr.hpp"
#include "llae/io.hpp"
#include "llae/zsl.hpp"

namespace llae::cli {
namespace {

using detail::format_double;

bool is_csv(const std::string& path) {
    return path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0;
}

std::vector<std::string> numbered_ids(std::size_t n) {
    std::vector<std::string> ids(n);
    for (std::size_t i = 0; i < n; ++i) ids[i] = std::to_string(i);
    return ids;
}

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> parts;
    std::string part;
    std::istringstream in(text);
    while (std::getline(in, part, sep)) {
        const auto t = detail::trim(part);
        if (!t.empty()) parts.emplace_back(t);
    }
    return parts;
}

double parse_real(const std::string& text, const std::string& what) {
    double v = 0.0;
    if (!detail::parse_double(text, v)) throw InvalidArgument("bad " + what + " value '" + text + "'");
    return v;
}

std::size_t parse_count(const std::string& text, const std::string& what) {
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw InvalidArgument("bad " + what + " value '" + text + "'");
    }
    return v;
}

// Model vocabulary lives next to the model file.
std::string vocab_path(const std::string& model_path) { return model_path + ".vocab.json"; }

struct Vocabulary {
    std::vector<std::string> items;
    std::vector<std::string> attributes;
};

void save_vocabulary(const std::string& model_path, const Vocabulary& v) {
    const nlohmann::json j{{"items", v.items}, {"attributes", v.attributes}};
    std::ofstream out(vocab_path(model_path), std::ios::trunc);
    if (!out) throw DataError("cannot write '" + vocab_path(model_path) + "'");
    out << j.dump(1) << '\n';
}

Vocabulary load_vocabulary(const std::string& model_path, const TrainedModel& model) {
    const std::string path = vocab_path(model_path);
    std::ifstream in(path);
    Vocabulary v;
    if (!in) {
        v.items = numbered_ids(model.features());
        v.attributes = numbered_ids(model.attributes());
        return v;
    }
    try {
        const auto j = nlohmann::json::parse(in);
        v.items = j.at("items").get<std::vector<std::string>>();
        v.attributes = j.at("attributes").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError("'" + path + "': " + e.what());
    }
    if (v.items.size() != model.features() || v.attributes.size() != model.attributes()) {
        throw DataError("'" + path + "' does not match the model's " + model.w.shape() + " encoder");
    }
    return v;
}

struct UserColumns {
    Matrix m;
    std::vector<std::string> user_ids;
};

// Columns per user over a fixed vocabulary, from a triple file or a dense CSV (one column per user).
UserColumns load_user_columns(const std::string& path, const std::vector<std::string>& vocab, ValueMode mode,
                              const std::string& what, std::ostream& err) {
    UserColumns out;
    if (is_csv(path)) {
        out.m = load_dense_csv(path);
        if (out.m.rows() != vocab.size()) {
            throw DimensionError(what + " '" + path + "' has " + std::to_string(out.m.rows()) + " rows, model expects " +
                                 std::to_string(vocab.size()));
        }
        out.user_ids = numbered_ids(out.m.cols());
        return out;
    }
    const TripleList triples = load_sparse_triples(path, mode);
    const Interner users(triples.row_ids);
    std::size_t unknown = 0;
    out.m = densify(triples, users, Interner(vocab), &unknown);
    out.user_ids = triples.row_ids;
    if (unknown > 0) err << "warning: " << unknown << " " << what << " entries use ids unknown to the model\n";
    return out;
}

InteractionDataset load_training_data(const std::string& behavior, const std::string& attributes, ValueMode mode,
                                      std::ostream& out, std::ostream& err) {
    if (is_csv(behavior) != is_csv(attributes)) {
        throw InvalidArgument("--behavior and --attributes must both be CSV or both be triple files");
    }
    if (is_csv(behavior)) {
        InteractionDataset d;
        d.x = load_dense_csv(behavior);
        d.s = load_dense_csv(attributes);
        if (d.x.cols() != d.s.cols()) {
            throw DimensionError("behavior " + d.x.shape() + " and attributes " + d.s.shape() +
                                 " have different sample counts");
        }
        d.user_ids = numbered_ids(d.x.cols());
        d.item_ids = numbered_ids(d.x.rows());
        d.attribute_ids = numbered_ids(d.s.rows());
        return d;  // dense inputs are feature matrices and may be signed
    }
    const TripleList b = load_sparse_triples(behavior, mode);
    const TripleList a = load_sparse_triples(attributes, ValueMode::real);
    if (b.collapsed > 0) out << b.collapsed << " duplicate behavior lines collapsed\n";
    if (a.collapsed > 0) out << a.collapsed << " duplicate attribute lines collapsed\n";
    AssembledDataset assembled = assemble(b, a);
    if (assembled.users_without_behavior > 0) {
        err << "warning: " << assembled.users_without_behavior << " users have attributes but no behavior\n";
    }
    if (assembled.users_without_attributes > 0) {
        err << "warning: " << assembled.users_without_attributes << " users have behavior but no attributes\n";
    }
    return std::move(assembled.dataset);
}

HyperparameterGrid parse_grid(const std::string& text, const ModelConfig& base) {
    HyperparameterGrid grid{{base.lambda}, {base.beta}, {base.rank_r}};
    for (const auto& entry : split(text, ';')) {
        const auto eq = entry.find('=');
        if (eq == std::string::npos) throw InvalidArgument("grid entry '" + entry + "' is not name=v1,v2,...");
        const std::string key(detail::trim(std::string_view(entry).substr(0, eq)));
        const auto values = split(entry.substr(eq + 1), ',');
        if (values.empty()) throw InvalidArgument("grid entry '" + key + "' has no values");
        if (key == "lambda") {
            grid.lambdas.clear();
            for (const auto& v : values) grid.lambdas.push_back(parse_real(v, "lambda"));
        } else if (key == "beta") {
            grid.betas.clear();
            for (const auto& v : values) grid.betas.push_back(parse_real(v, "beta"));
        } else if (key == "rank") {
            grid.ranks.clear();
            for (const auto& v : values) grid.ranks.push_back(parse_count(v, "rank"));
        } else {
            throw InvalidArgument("unknown grid parameter '" + key + "'");
        }
    }
    return grid;
}

std::string describe(const ModelConfig& c) {
    return "lambda=" + format_double(c.lambda) + " beta=" + format_double(c.beta) + " rank=" + std::to_string(c.rank_r);
}

std::ofstream open_csv(const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw DataError("cannot write '" + path + "'");
    return f;
}

std::vector<std::string> read_labels(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::vector<std::string> labels;
    std::string line;
    while (std::getline(in, line)) {
        const auto t = detail::trim(line);
        if (!t.empty()) labels.emplace_back(t);
    }
    return labels;
}

// ---------------------------------------------------------------------------

struct TrainOptions {
    std::string behavior, attributes, out, normalize = "none", value_mode = "binary", grid, csv;
    ModelConfig config;
    std::uint64_t grid_seed = 0;
    bool grid_seed_set = false;
};

void cmd_train(const TrainOptions& o, std::ostream& out, std::ostream& err) {
    const auto start = std::chrono::steady_clock::now();
    ModelConfig cfg = o.config;
    cfg.normalization = o.normalize == "l2" ? ColumnNormalization::l2 : ColumnNormalization::none;
    const ValueMode mode = o.value_mode == "count" ? ValueMode::count : ValueMode::binary;

    const InteractionDataset data = load_training_data(o.behavior, o.attributes, mode, out, err);
    out << "dataset: " << data.users() << " users, " << data.items() << " items, " << data.attributes()
        << " attributes\n";

    if (!o.grid.empty()) {
        const HyperparameterGrid grid = parse_grid(o.grid, cfg);
        const auto result = grid_search(data, grid, o.grid_seed_set ? o.grid_seed : cfg.seed, cfg);
        out << "grid search over " << result.evaluated.size() << " configurations (validation mAP)\n";
        for (const auto& p : result.evaluated) {
            out << "  " << describe(p.config) << "  " << format_double(p.validation_map) << '\n';
        }
        cfg = result.best;
        out << "selected " << describe(cfg) << '\n';
    }

    const TrainedModel model = train(data.x, data.s, cfg);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    out << model.corrupted_entries << " entries corrupted\n";
    out << "iteration\tobjective\n";
    for (std::size_t i = 0; i < model.objective_trace.size(); ++i) {
        out << i + 1 << '\t' << format_double(model.objective_trace[i]) << '\n';
    }
    out << (model.converged ? "converged" : "stopped") << " after " << model.objective_trace.size()
        << " iterations\n";
    if (model.ridge > 0.0) err << "warning: ridge " << format_double(model.ridge) << " added to a singular system\n";
    out << "wall-clock " << format_double(seconds) << " s\n";

    save_model(model, o.out);
    save_vocabulary(o.out, {data.item_ids, data.attribute_ids});
    out << "model written to " << o.out << '\n';

    if (!o.csv.empty()) {
        auto f = open_csv(o.csv);
        f << "iteration,objective\n";
        for (std::size_t i = 0; i < model.objective_trace.size(); ++i) {
            f << i + 1 << ',' << format_double(model.objective_trace[i]) << '\n';
        }
    }
}

struct EvalZslOptions {
    std::string model, features, prototypes, prototype_labels, truth, metric = "cosine", csv;
};

void cmd_eval_zsl(const EvalZslOptions& o, std::ostream& out) {
    const TrainedModel model = load_model(o.model);
    const Matrix x = load_dense_csv(o.features);
    PrototypeSet protos;
    protos.prototypes = load_dense_csv(o.prototypes);
    protos.labels = o.prototype_labels.empty() ? numbered_ids(protos.prototypes.cols()) : read_labels(o.prototype_labels);
    const auto truth = read_labels(o.truth);
    if (truth.size() != x.cols()) {
        throw DimensionError("--truth has " + std::to_string(truth.size()) + " labels for " +
                             std::to_string(x.cols()) + " test columns");
    }
    if (protos.prototypes.rows() != model.attributes()) {
        throw DimensionError("prototypes " + protos.prototypes.shape() + " do not have the model's " +
                             std::to_string(model.attributes()) + " attribute rows");
    }
    const auto metric = o.metric == "euclidean" ? DistanceMetric::euclidean : DistanceMetric::cosine;
    const auto predicted = classify(model, x, protos, metric);
    const double acc = accuracy(predicted, truth);

    std::map<std::string, std::pair<std::size_t, std::size_t>> per_class;  // label -> (instances, correct)
    for (std::size_t i = 0; i < truth.size(); ++i) {
        auto& c = per_class[truth[i]];
        ++c.first;
        c.second += predicted[i] == truth[i];
    }
    out << "accuracy " << format_double(acc) << " (" << truth.size() << " instances, " << per_class.size()
        << " classes, " << o.metric << ")\n";
    out << "class\tinstances\tcorrect\n";
    for (const auto& [label, c] : per_class) out << label << '\t' << c.first << '\t' << c.second << '\n';

    if (!o.csv.empty()) {
        auto f = open_csv(o.csv);
        f << "class,instances,correct\n";
        for (const auto& [label, c] : per_class) f << label << ',' << c.first << ',' << c.second << '\n';
        std::size_t correct = 0;
        for (const auto& [label, c] : per_class) correct += c.second;
        f << "all," << truth.size() << ',' << correct << '\n';
    }
}

struct EvalCsrOptions {
    std::string model, attributes, relevance, k_list = "1,5,10,20", csv;
    std::size_t map_n = 100;
};

void cmd_eval_csr(const EvalCsrOptions& o, std::ostream& out, std::ostream& err) {
    const TrainedModel model = load_model(o.model);
    const Vocabulary vocab = load_vocabulary(o.model, model);
    std::vector<std::size_t> ks;
    for (const auto& k : split(o.k_list, ',')) ks.push_back(parse_count(k, "--k-list"));
    if (ks.empty()) throw InvalidArgument("--k-list is empty");
    if (o.map_n < 1) throw InvalidArgument("--map-n must be at least 1");
    const std::size_t d = model.features();
    const std::size_t max_k = *std::max_element(ks.begin(), ks.end());
    if (max_k > d || *std::min_element(ks.begin(), ks.end()) < 1) {
        throw InvalidArgument("--k-list values must lie in [1, " + std::to_string(d) + "]");
    }

    const UserColumns users = load_user_columns(o.attributes, vocab.attributes, ValueMode::real, "attribute", err);
    std::vector<RelevanceSet> rels;
    if (is_csv(o.relevance)) {
        const Matrix r = load_dense_csv(o.relevance);
        if (r.rows() != d || r.cols() != users.m.cols()) {
            throw DimensionError("relevance " + r.shape() + " does not match " + std::to_string(d) + " items x " +
                                 std::to_string(users.m.cols()) + " users");
        }
        rels = relevance_from_behavior(r, users.user_ids);
    } else {
        const TripleList triples = load_sparse_triples(o.relevance, ValueMode::binary);
        const Interner user_index(users.user_ids);
        std::size_t unknown = 0;
        rels = relevance_from_behavior(densify(triples, user_index, Interner(vocab.items), &unknown), users.user_ids);
        if (unknown > 0) err << "warning: " << unknown << " relevance entries use item ids unknown to the model\n";
        std::size_t strangers = 0;
        for (const auto& id : triples.row_ids) strangers += user_index.find(id) == user_index.size();
        if (strangers > 0) err << "warning: " << strangers << " relevance users have no attributes; ignored\n";
    }

    const auto rankeds = recommend(model, users.m, std::max(max_k, std::min(o.map_n, d)), users.user_ids);
    const RankingReport report = evaluate_rankings(rankeds, rels, ks, o.map_n);

    out << "users " << report.users << " (excluded " << report.excluded << " with no held-out items)\n";
    out << "k\tprecision\trecall\n";
    for (std::size_t i = 0; i < ks.size(); ++i) {
        out << ks[i] << '\t' << format_double(report.precision[i]) << '\t' << format_double(report.recall[i]) << '\n';
    }
    out << "mAP@" << o.map_n << '\t' << format_double(report.map) << '\n';

    if (!o.csv.empty()) {
        auto f = open_csv(o.csv);
        f << "k,precision,recall\n";
        for (std::size_t i = 0; i < ks.size(); ++i) {
            f << ks[i] << ',' << format_double(report.precision[i]) << ',' << format_double(report.recall[i]) << '\n';
        }
        f << "map@" << o.map_n << ',' << format_double(report.map) << ",\n";
    }
}

struct RecommendOptions {
    std::string model, attributes, out;
    std::size_t top_k = 10;
};

void cmd_recommend(const RecommendOptions& o, std::ostream& out, std::ostream& err) {
    const TrainedModel model = load_model(o.model);
    const Vocabulary vocab = load_vocabulary(o.model, model);
    const UserColumns users = load_user_columns(o.attributes, vocab.attributes, ValueMode::real, "attribute", err);
    const auto rankeds = recommend(model, users.m, o.top_k, users.user_ids);

    std::ofstream file;
    if (!o.out.empty()) {
        file.open(o.out, std::ios::trunc);
        if (!file) throw DataError("cannot write '" + o.out + "'");
    }
    std::ostream& sink = o.out.empty() ? out : file;
    for (const auto& r : rankeds) {
        for (std::size_t i = 0; i < r.item_indices.size(); ++i) {
            sink << r.user_id << '\t' << vocab.items[r.item_indices[i]] << '\t' << format_double(r.scores[i]) << '\n';
        }
    }
}

struct SplitOptions {
    std::string behavior, attributes, prefix, value_mode = "binary";
    double fraction = 0.1;
    std::uint64_t seed = 0;
};

TripleList to_triples(const Matrix& m, const std::vector<std::string>& row_ids, const std::vector<std::string>& user_ids) {
    TripleList t;
    t.row_ids = user_ids;
    t.col_ids = row_ids;
    for (std::size_t u = 0; u < m.cols(); ++u) {
        for (std::size_t i = 0; i < m.rows(); ++i) {
            if (m(i, u) != 0.0) t.triples.push_back({u, i, m(i, u)});
        }
    }
    return t;
}

void cmd_split(const SplitOptions& o, std::ostream& out, std::ostream& err) {
    const ValueMode mode = o.value_mode == "count" ? ValueMode::count : ValueMode::binary;
    const InteractionDataset data = load_training_data(o.behavior, o.attributes, mode, out, err);
    const ColdSplit parts = cold_split(data, o.fraction, o.seed);
    const std::pair<const char*, const InteractionDataset*> sides[] = {{"train", &parts.train}, {"test", &parts.test}};
    for (const auto& [name, d] : sides) {
        const std::string base = o.prefix + name;
        save_sparse_triples(base + "_behavior.tsv", to_triples(d->x, d->item_ids, d->user_ids));
        save_sparse_triples(base + "_attributes.tsv", to_triples(d->s, d->attribute_ids, d->user_ids));
        out << name << ": " << d->users() << " users -> " << base << "_behavior.tsv, " << base << "_attributes.tsv\n";
    }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Low-rank linear autoencoder: training, zero-shot evaluation and cold-start recommendation", "llae"};
    app.require_subcommand(1);
    const CLI::IsMember normalizations({"none", "l2"});
    const CLI::IsMember value_modes({"binary", "count"});

    TrainOptions t;
    auto* train_cmd = app.add_subcommand("train", "fit a model on behavior and attribute data");
    train_cmd->add_option("--behavior", t.behavior, "item interactions: user<TAB>item<TAB>value, or dense CSV")
        ->required()->check(CLI::ExistingFile);
    train_cmd->add_option("--attributes", t.attributes, "user attributes: user<TAB>attribute<TAB>value, or dense CSV")
        ->required()->check(CLI::ExistingFile);
    train_cmd->add_option("--out", t.out, "model file")->required();
    train_cmd->add_option("--lambda", t.config.lambda, "embedding weight")->capture_default_str();
    train_cmd->add_option("--beta", t.config.beta, "low-rank weight")->capture_default_str();
    train_cmd->add_option("--rank", t.config.rank_r, "target rank r")->capture_default_str();
    train_cmd->add_option("--corruption", t.config.corruption_rate, "fraction of X zeroed")->capture_default_str();
    train_cmd->add_option("--max-iters", t.config.max_iters, "outer iteration cap")->capture_default_str();
    train_cmd->add_option("--tol", t.config.rel_tol, "relative objective tolerance")->capture_default_str();
    train_cmd->add_option("--seed", t.config.seed, "corruption seed")->capture_default_str();
    train_cmd->add_option("--normalize", t.normalize, "column normalization")->check(normalizations)->capture_default_str();
    train_cmd->add_option("--value-mode", t.value_mode, "behavior values")->check(value_modes)->capture_default_str();
    train_cmd->add_option("--grid", t.grid, "grid search, e.g. \"lambda=0.1,1;beta=0,10;rank=2,4\"");
    auto* grid_seed = train_cmd->add_option("--grid-seed", t.grid_seed, "validation split seed (default --seed)");
    train_cmd->add_option("--csv", t.csv, "write the objective trace as CSV");

    EvalZslOptions z;
    auto* zsl_cmd = app.add_subcommand("eval-zsl", "zero-shot accuracy against class prototypes");
    zsl_cmd->add_option("--model", z.model, "model file")->required();
    zsl_cmd->add_option("--test-features", z.features, "dense CSV, one column per instance")
        ->required()->check(CLI::ExistingFile);
    zsl_cmd->add_option("--prototypes", z.prototypes, "dense CSV, one column per class")
        ->required()->check(CLI::ExistingFile);
    zsl_cmd->add_option("--prototype-labels", z.prototype_labels, "one label per line (default 0..c-1)")
        ->check(CLI::ExistingFile);
    zsl_cmd->add_option("--truth", z.truth, "one label per line per test instance")->required()->check(CLI::ExistingFile);
    zsl_cmd->add_option("--metric", z.metric, "distance")
        ->check(CLI::IsMember({"cosine", "euclidean"}))->capture_default_str();
    zsl_cmd->add_option("--csv", z.csv, "write per-class counts as CSV");

    EvalCsrOptions c;
    auto* csr_cmd = app.add_subcommand("eval-csr", "cold-start ranking metrics");
    csr_cmd->add_option("--model", c.model, "model file")->required();
    csr_cmd->add_option("--test-attributes", c.attributes, "cold users' attributes")->required()->check(CLI::ExistingFile);
    csr_cmd->add_option("--test-relevance", c.relevance, "held-out interactions")->required()->check(CLI::ExistingFile);
    csr_cmd->add_option("--k-list", c.k_list, "cutoffs for precision and recall")->capture_default_str();
    csr_cmd->add_option("--map-n", c.map_n, "mAP depth")->capture_default_str();
    csr_cmd->add_option("--csv", c.csv, "write the metric table as CSV");

    RecommendOptions r;
    auto* rec_cmd = app.add_subcommand("recommend", "top-k items for new users");
    rec_cmd->add_option("--model", r.model, "model file")->required();
    rec_cmd->add_option("--attributes", r.attributes, "new users' attributes")->required()->check(CLI::ExistingFile);
    rec_cmd->add_option("--top-k", r.top_k, "items per user")->capture_default_str();
    rec_cmd->add_option("--out", r.out, "output file (default stdout)");

    SplitOptions s;
    auto* split_cmd = app.add_subcommand("split", "hold out cold users");
    split_cmd->add_option("--behavior", s.behavior, "item interactions")->required()->check(CLI::ExistingFile);
    split_cmd->add_option("--attributes", s.attributes, "user attributes")->required()->check(CLI::ExistingFile);
    split_cmd->add_option("--prefix", s.prefix, "output path prefix")->required();
    split_cmd->add_option("--fraction", s.fraction, "cold user fraction")->capture_default_str();
    split_cmd->add_option("--seed", s.seed, "shuffle seed")->capture_default_str();
    split_cmd->add_option("--value-mode", s.value_mode, "behavior values")->check(value_modes)->capture_default_str();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? ok : usage;
    }

    try {
        if (train_cmd->parsed()) {
            t.grid_seed_set = grid_seed->count() > 0;
            cmd_train(t, out, err);
        } else if (zsl_cmd->parsed()) {
            cmd_eval_zsl(z, out);
        } else if (csr_cmd->parsed()) {
            cmd_eval_csr(c, out, err);
        } else if (rec_cmd->parsed()) {
            cmd_recommend(r, out, err);
        } else if (split_cmd->parsed()) {
            cmd_split(s, out, err);
        }
    } catch (const InvalidArgument& e) {
        err << "error: " << e.what() << '\n';
        return usage;
    } catch (const NumericError& e) {
        err << "numeric failure: " << e.what() << '\n';
        return numeric;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return data;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return data;
    }
    return ok;
}

}  // namespace llae::cli
