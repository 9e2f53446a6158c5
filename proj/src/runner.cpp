#include "loglearn/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <thread>

#include "loglearn/rng.hpp"

namespace loglearn {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string hash_hex(uint64_t h) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// Distinct sub-task seeds within one run. Counters are spaced by purpose so
// adding a new consumer never shifts the others.
enum : uint64_t {
    kSeedTrain = 1,
    kSeedInit = 2,
    kSeedIntervals = 10,
    kSeedPairs = 11,
    kSeedTriplets = 12,
    kSeedEvalIntervals = 101,
    kSeedEvalCluster = 201,
    kSeedEvalPairs = 301,
    kSeedGeo = 401,
};

std::map<std::string, int> label_ids(const std::vector<std::string>& raw) {
    std::set<std::string> uniq(raw.begin(), raw.end());
    std::map<std::string, int> ids;
    int next = 0;
    for (const auto& s : uniq) ids[s] = next++;
    return ids;
}

std::string well_target_string(const WellRecord& w, EvalTarget target) {
    switch (target) {
        case EvalTarget::formation:
            if (w.formation.empty())
                throw DataError("evaluation: well " + w.well_id + " has no formation label");
            return w.formation;
        case EvalTarget::formation_class:
            if (w.formation.empty() || w.class_label.empty())
                throw DataError("evaluation: well " + w.well_id +
                                " lacks formation or class labels");
            return w.formation + "/" + w.class_label;
        default:
            throw ConfigError("well_target_string: target is not well-level");
    }
}

// Truth labels for a set of intervals under the configured target.
Labeling interval_truth(const std::vector<IntervalSample>& intervals,
                        const std::vector<WellRecord>& wells, EvalTarget target, int geo_k,
                        uint64_t seed) {
    std::map<std::string, const WellRecord*> by_id;
    for (const auto& w : wells) by_id[w.well_id] = &w;
    auto well_of = [&](const IntervalSample& s) -> const WellRecord& {
        auto it = by_id.find(s.well_id);
        if (it == by_id.end()) throw DataError("evaluation: unknown well " + s.well_id);
        return *it->second;
    };

    Labeling truth;
    truth.reserve(intervals.size());
    if (target == EvalTarget::geographical) {
        int k = std::min<int>(geo_k, static_cast<int>(wells.size()));
        auto geo = geographic_labels(wells, std::max(1, k), seed);
        for (const auto& s : intervals) truth.push_back(geo.at(well_of(s).well_id));
        return truth;
    }
    if (target == EvalTarget::rock_type) {
        // majority rock type within each interval, then string -> id
        std::vector<std::string> names;
        for (const auto& s : intervals) {
            const WellRecord& w = well_of(s);
            if (w.rock_type.empty())
                throw DataError("evaluation: well " + w.well_id + " has no rock_type column");
            std::map<std::string, int> votes;
            int64_t end = s.start_index + s.values.rows();
            for (int64_t i = s.start_index; i < end; ++i)
                ++votes[w.rock_type[static_cast<size_t>(i)]];
            std::string best;
            int best_n = -1;
            for (const auto& [name, n] : votes)
                if (n > best_n) {
                    best = name;
                    best_n = n;
                }
            names.push_back(best);
        }
        auto ids = label_ids(names);
        for (const auto& n : names) truth.push_back(ids.at(n));
        return truth;
    }

    std::vector<std::string> names;
    for (const auto& s : intervals) names.push_back(well_target_string(well_of(s), target));
    auto ids = label_ids(names);
    for (const auto& n : names) truth.push_back(ids.at(n));
    return truth;
}

Tensor embed_all(const Model& model, const std::vector<IntervalSample>& intervals) {
    int64_t d = model.spec().embedding_dim;
    Tensor out({static_cast<int64_t>(intervals.size()), d});
    for (size_t i = 0; i < intervals.size(); ++i) {
        Tensor z = model.encode(intervals[i].values);
        for (int64_t j = 0; j < d; ++j) out.at(static_cast<int64_t>(i), j) = z[j];
    }
    return out;
}

std::string algo_name(ClusterAlgo a) {
    switch (a) {
        case ClusterAlgo::kmeans: return "kmeans";
        case ClusterAlgo::gmm: return "gmm";
        case ClusterAlgo::agglomerative: return "agglomerative";
    }
    return "?";
}

TrainingData build_training_data(const ExperimentConfig& cfg,
                                 const std::vector<WellRecord>& train_wells, uint64_t seed) {
    TrainingData data;
    const TrainSettings& ts = cfg.train;
    bool wants_intervals = ts.objective == Objective::ae || ts.objective == Objective::vae ||
                           ts.objective == Objective::aae || ts.objective == Objective::ar;
    int64_t horizon = 0;
    if (ts.objective == Objective::ar || ts.aux_ar_weight > 0.0) horizon = cfg.model.ar_horizon;

    if (wants_intervals)
        data.intervals =
            sample_intervals(train_wells, cfg.interval_len, cfg.n_samples,
                             derive_seed(seed, kSeedIntervals), horizon,
                             horizon > 0 ? &data.next_values : nullptr);
    if (ts.objective == Objective::siamese)
        data.pairs = sample_pairs(train_wells, cfg.interval_len, cfg.pairing, cfg.n_samples,
                                  derive_seed(seed, kSeedPairs));
    if (ts.objective == Objective::triplet)
        data.triplets = sample_triplets(train_wells, cfg.interval_len, cfg.pairing, cfg.n_samples,
                                        derive_seed(seed, kSeedTriplets));
    if (ts.aux_class_weight > 0.0) {
        std::vector<std::string> names;
        for (const auto& w : train_wells)
            names.push_back(well_target_string(w, EvalTarget::formation));
        auto ids = label_ids(names);
        for (const auto& w : train_wells) data.well_class[w.well_id] = ids.at(w.formation);
    }
    return data;
}

// Classifier head size must cover the training class labels.
void fit_class_count(ModelSpec& spec, const TrainingData& data, const TrainSettings& ts) {
    if (ts.aux_class_weight <= 0.0) return;
    int max_label = -1;
    for (const auto& [w, c] : data.well_class) max_label = std::max(max_label, c);
    if (spec.classes <= max_label) spec.classes = max_label + 1;
}

MetricsReport base_report(const char* kind, const ExperimentConfig& cfg, uint64_t seed) {
    MetricsReport rep;
    rep.config_hash = config_hash(cfg.flat);
    rep.seed = seed;
    rep.objective = objective_name(cfg.train.objective);
    rep.run_id = std::string(kind) + "-" + hash_hex(rep.config_hash) + "-" + std::to_string(seed);
    return rep;
}

SourceAnchor load_anchor(const ExperimentConfig& cfg) {
    if (cfg.anchor_path.empty())
        throw ConfigError("transfer: transfer.anchor checkpoint path is required");
    return SourceAnchor::load(cfg.anchor_path);
}

void cap_train_wells(std::vector<WellRecord>& train, int wells_used) {
    if (wells_used > 0 && static_cast<size_t>(wells_used) < train.size())
        train.resize(static_cast<size_t>(wells_used));
}

}  // namespace

SplitDataset load_split(const std::string& path, const ExperimentConfig& cfg) {
    if (path.empty()) throw ConfigError("config: data.path is required");
    SplitDataset ds;
    auto wells = load_wells_file(path, cfg.schema, &ds.warnings);
    if (wells.empty()) throw DataError("dataset " + path + " contains no usable wells");

    std::map<std::string, std::vector<size_t>> by_formation;
    for (size_t i = 0; i < wells.size(); ++i) by_formation[wells[i].formation].push_back(i);

    std::set<size_t> test_idx;
    for (auto& [formation, idx] : by_formation) {
        std::sort(idx.begin(), idx.end(),
                  [&](size_t a, size_t b) { return wells[a].well_id < wells[b].well_id; });
        size_t n = idx.size();
        // 10 held-out wells when a quarter of the formation reaches that many
        size_t t = std::min<size_t>(static_cast<size_t>(cfg.test_wells), (n + 3) / 4);
        t = std::min(t, n > 0 ? n - 1 : 0);
        for (size_t i = n - t; i < n; ++i) test_idx.insert(idx[i]);
    }

    for (size_t i = 0; i < wells.size(); ++i)
        (test_idx.count(i) ? ds.test : ds.train).push_back(std::move(wells[i]));
    if (ds.train.empty()) throw DataError("dataset " + path + ": no training wells after split");

    ds.stats = compute_channel_stats(ds.train);
    standardize(ds.train, ds.stats, &ds.warnings);
    standardize(ds.test, ds.stats, &ds.warnings);
    return ds;
}

std::vector<MetricRow> evaluate_model(const Model& model, const ExperimentConfig& cfg,
                                      const std::vector<WellRecord>& test_wells, uint64_t seed,
                                      const std::string& split_name) {
    std::vector<MetricRow> rows;
    if (test_wells.empty() || cfg.eval.n_intervals <= 0) return rows;

    auto intervals = sample_intervals(test_wells, cfg.interval_len, cfg.eval.n_intervals,
                                      derive_seed(seed, kSeedEvalIntervals));
    Tensor emb = embed_all(model, intervals);
    Labeling truth = interval_truth(intervals, test_wells, cfg.eval.target, cfg.eval.geo_k,
                                    derive_seed(seed, kSeedGeo));
    int distinct = static_cast<int>(std::set<int>(truth.begin(), truth.end()).size());
    int k = cfg.eval.k > 0 ? cfg.eval.k : distinct;

    for (ClusterAlgo algo : cfg.eval.algorithms) {
        uint64_t base = derive_seed(seed, kSeedEvalCluster + static_cast<uint64_t>(algo));
        ClusterScores single = cluster_and_score(emb, truth, algo, k, derive_seed(base, 0));
        MetricRow row;
        row.split = split_name;
        row.target = eval_target_name(cfg.eval.target);
        row.algorithm = algo_name(algo);
        row.mode = "single";
        row.ari = single.ari;
        row.ami = single.ami;
        row.v = single.v;
        rows.push_back(row);

        ClusterScores best = single;
        // agglomerative has no seed; its restarts would all repeat
        int restarts = algo == ClusterAlgo::agglomerative ? 1 : std::max(1, cfg.eval.restarts);
        for (int r = 1; r < restarts; ++r) {
            ClusterScores s = cluster_and_score(emb, truth, algo, k, derive_seed(base, r));
            if (s.ari > best.ari) best = s;
        }
        row.mode = "best_of_restarts";
        row.ari = best.ari;
        row.ami = best.ami;
        row.v = best.v;
        rows.push_back(row);
    }

    if (model.spec().similarity && cfg.eval.n_pairs > 0) {
        auto pairs = sample_pairs(test_wells, cfg.interval_len, cfg.pairing, cfg.eval.n_pairs,
                                  derive_seed(seed, kSeedEvalPairs));
        ScoreTable table;
        Labeling pred, pair_truth;
        for (const auto& p : pairs) {
            double s = model.similarity(model.encode(p.a.values), model.encode(p.b.values));
            table.truth.push_back(p.label);
            table.scores.push_back(s);
            pred.push_back(s >= 0.5 ? 1 : 0);
            pair_truth.push_back(p.label);
        }
        MetricRow row;
        row.split = split_name;
        row.target = "pairing";
        row.algorithm = "pair_scores";
        row.mode = "single";
        row.accuracy = accuracy(pair_truth, pred);
        row.roc_auc = roc_auc(table);
        row.pr_auc = pr_auc(table);
        rows.push_back(row);
    }
    return rows;
}

MetricsReport run_pretrain(const ExperimentConfig& cfg, uint64_t seed,
                           const std::string& out_dir) {
    auto t0 = Clock::now();
    MetricsReport rep = base_report("pretrain", cfg, seed);

    SplitDataset ds = load_split(cfg.data_path, cfg);
    cap_train_wells(ds.train, cfg.wells_used);
    TrainingData data = build_training_data(cfg, ds.train, seed);

    ModelSpec spec = cfg.model;
    fit_class_count(spec, data, cfg.train);
    Model model = Model::init(spec, derive_seed(seed, kSeedInit));

    TrainSettings settings = cfg.train;
    settings.seed = derive_seed(seed, kSeedTrain);
    TrainResult tr = train_model(model, data, settings);
    rep.epochs = tr.epochs;
    rep.aborted = tr.aborted;
    rep.abort_reason = tr.abort_reason;

    std::filesystem::create_directories(out_dir);
    rep.checkpoint_path = out_dir + "/model.ckpt";
    model.save(rep.checkpoint_path);
    if (!tr.aborted) rep.rows = evaluate_model(model, cfg, ds.test, seed, "validation");

    rep.wall_clock_seconds = seconds_since(t0);
    write_report(rep, out_dir);
    if (rep.aborted) throw NumericError("pretrain aborted: " + rep.abort_reason);
    return rep;
}

MetricsReport run_transfer(const ExperimentConfig& cfg, uint64_t seed,
                           const std::string& out_dir) {
    auto t0 = Clock::now();
    MetricsReport rep = base_report("transfer", cfg, seed);
    TransferConfig tc = cfg.transfer.value_or(TransferConfig{});
    rep.method = transfer_method_name(tc.method);

    SplitDataset ds = load_split(cfg.data_path, cfg);
    cap_train_wells(ds.train, cfg.wells_used);

    ExperimentConfig tcfg = cfg;
    tcfg.train = cfg.transfer_train;  // sampling follows the transfer settings
    TrainingData data = build_training_data(tcfg, ds.train, seed);

    std::optional<SourceAnchor> anchor;
    ModelSpec spec = cfg.model;
    if (tc.method != TransferMethod::scratch) {
        anchor = load_anchor(cfg);
        spec = anchor->model.spec();
    } else {
        fit_class_count(spec, data, cfg.transfer_train);
    }
    Model model = Model::init(spec, derive_seed(seed, kSeedInit));

    TrainSettings settings = cfg.transfer_train;
    settings.seed = derive_seed(seed, kSeedTrain);
    TrainResult tr =
        transfer_fit(model, data, anchor ? &*anchor : nullptr, tc, settings);
    rep.epochs = tr.epochs;
    rep.aborted = tr.aborted;
    rep.abort_reason = tr.abort_reason;

    std::filesystem::create_directories(out_dir);
    rep.checkpoint_path = out_dir + "/model.ckpt";
    model.save(rep.checkpoint_path);
    if (!tr.aborted) rep.rows = evaluate_model(model, cfg, ds.test, seed, "validation");

    rep.wall_clock_seconds = seconds_since(t0);
    write_report(rep, out_dir);
    if (rep.aborted) throw NumericError("transfer aborted: " + rep.abort_reason);
    return rep;
}

MetricsReport run_reverse(const ExperimentConfig& cfg, uint64_t seed,
                          const std::string& out_dir) {
    auto t0 = Clock::now();
    MetricsReport rep = base_report("reverse", cfg, seed);
    TransferConfig tc = cfg.transfer.value_or(TransferConfig{});
    rep.method = transfer_method_name(tc.method);
    if (cfg.source_path.empty())
        throw ConfigError("reverse: data.source_path is required for source re-validation");

    SplitDataset target = load_split(cfg.data_path, cfg);
    cap_train_wells(target.train, cfg.wells_used);
    SplitDataset source = load_split(cfg.source_path, cfg);

    std::optional<SourceAnchor> anchor;
    ModelSpec spec = cfg.model;
    if (tc.method != TransferMethod::scratch) {
        anchor = load_anchor(cfg);
        spec = anchor->model.spec();
        auto pre = evaluate_model(anchor->model, cfg, source.test, seed, "source_pre");
        rep.rows.insert(rep.rows.end(), pre.begin(), pre.end());
    }

    ExperimentConfig tcfg = cfg;
    tcfg.train = cfg.transfer_train;
    TrainingData data = build_training_data(tcfg, target.train, seed);
    if (tc.method == TransferMethod::scratch) fit_class_count(spec, data, cfg.transfer_train);
    Model model = Model::init(spec, derive_seed(seed, kSeedInit));

    TrainSettings settings = cfg.transfer_train;
    settings.seed = derive_seed(seed, kSeedTrain);
    TrainResult tr = transfer_fit(model, data, anchor ? &*anchor : nullptr, tc, settings);
    rep.epochs = tr.epochs;
    rep.aborted = tr.aborted;
    rep.abort_reason = tr.abort_reason;

    std::filesystem::create_directories(out_dir);
    rep.checkpoint_path = out_dir + "/model.ckpt";
    model.save(rep.checkpoint_path);
    if (!tr.aborted) {
        auto post = evaluate_model(model, cfg, source.test, seed, "source_post");
        rep.rows.insert(rep.rows.end(), post.begin(), post.end());
        auto val = evaluate_model(model, cfg, target.test, seed, "validation");
        rep.rows.insert(rep.rows.end(), val.begin(), val.end());
    }

    rep.wall_clock_seconds = seconds_since(t0);
    write_report(rep, out_dir);
    if (rep.aborted) throw NumericError("reverse aborted: " + rep.abort_reason);
    return rep;
}

std::vector<MetricsReport> run_sweep(const ExperimentConfig& cfg, uint64_t seed,
                                     const std::string& out_dir, int threads) {
    if (cfg.sweep_axes.empty()) throw ConfigError("sweep: no sweep.* axes in the config");
    const auto& axes = cfg.sweep_axes;

    size_t total = 1;
    for (const auto& a : axes) total *= a.values.size();

    std::vector<std::vector<std::string>> grid_values(total);
    std::vector<FlatConfig> grid_flat(total);
    for (size_t i = 0; i < total; ++i) {
        FlatConfig flat = cfg.flat;
        for (auto it = flat.begin(); it != flat.end();)
            it = it->first.rfind("sweep.", 0) == 0 ? flat.erase(it) : std::next(it);
        size_t rem = i;
        for (const auto& a : axes) {
            const std::string& v = a.values[rem % a.values.size()];
            rem /= a.values.size();
            flat[a.key] = v;
            grid_values[i].push_back(v);
        }
        grid_flat[i] = std::move(flat);
    }

    std::vector<MetricsReport> children(total);
    std::vector<std::exception_ptr> failures(total);
    std::atomic<size_t> next{0};
    auto worker = [&] {
        for (;;) {
            size_t i = next.fetch_add(1);
            if (i >= total) return;
            try {
                ExperimentConfig child = ExperimentConfig::from_flat(grid_flat[i]);
                uint64_t child_seed = derive_seed(seed, i);
                std::string child_dir = out_dir + "/grid_" + std::to_string(i);
                children[i] = child.transfer ? run_transfer(child, child_seed, child_dir)
                                             : run_pretrain(child, child_seed, child_dir);
            } catch (...) {
                failures[i] = std::current_exception();
            }
        }
    };
    int nthreads = std::max(1, std::min<int>(threads, static_cast<int>(total)));
    std::vector<std::thread> pool;
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    for (const auto& f : failures)
        if (f) std::rethrow_exception(f);

    std::vector<std::string> axis_keys;
    for (const auto& a : axes) axis_keys.push_back(a.key);
    std::filesystem::create_directories(out_dir);
    append_summary_csv(out_dir + "/sweep_summary.csv", children, axis_keys, grid_values);
    return children;
}

void run_export(const ExperimentConfig& cfg, uint64_t seed, const std::string& out_dir) {
    if (cfg.checkpoint_path.empty()) throw ConfigError("export: checkpoint path is required");
    Model model = Model::load(cfg.checkpoint_path);

    std::filesystem::create_directories(out_dir);
    std::ofstream out(out_dir + "/embeddings.csv", std::ios::binary);
    if (!out) throw DataError("export: cannot write " + out_dir + "/embeddings.csv");
    out << "well_id,start_depth,label";
    for (int j = 0; j < model.spec().embedding_dim; ++j) out << ",e" << j;
    out << "\n";
    if (cfg.eval.n_intervals <= 0) return;

    SplitDataset ds = load_split(cfg.data_path, cfg);
    std::vector<WellRecord> wells = ds.train;
    wells.insert(wells.end(), ds.test.begin(), ds.test.end());
    std::sort(wells.begin(), wells.end(),
              [](const WellRecord& a, const WellRecord& b) { return a.well_id < b.well_id; });

    auto intervals = sample_intervals(wells, cfg.interval_len, cfg.eval.n_intervals,
                                      derive_seed(seed, kSeedEvalIntervals));
    Labeling labels = interval_truth(intervals, wells, cfg.eval.target, cfg.eval.geo_k,
                                     derive_seed(seed, kSeedGeo));

    std::vector<size_t> order(intervals.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (intervals[a].well_id != intervals[b].well_id)
            return intervals[a].well_id < intervals[b].well_id;
        return intervals[a].start_depth < intervals[b].start_depth;
    });

    for (size_t i : order) {
        Tensor z = model.encode(intervals[i].values);
        out << intervals[i].well_id << "," << format_double(intervals[i].start_depth) << ","
            << labels[i];
        for (int64_t j = 0; j < z.numel(); ++j) out << "," << format_double(z[j]);
        out << "\n";
    }
}

MetricsReport run_eval(const ExperimentConfig& cfg, uint64_t seed, const std::string& out_dir) {
    auto t0 = Clock::now();
    if (cfg.checkpoint_path.empty()) throw ConfigError("eval: checkpoint path is required");
    MetricsReport rep = base_report("eval", cfg, seed);
    Model model = Model::load(cfg.checkpoint_path);
    rep.checkpoint_path = cfg.checkpoint_path;

    SplitDataset ds = load_split(cfg.data_path, cfg);
    rep.rows = evaluate_model(model, cfg, ds.test, seed, "validation");
    rep.wall_clock_seconds = seconds_since(t0);
    write_report(rep, out_dir);
    return rep;
}

}  // namespace loglearn
