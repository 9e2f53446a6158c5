// Acceptance checks for the library and CLI: one pass/fail line per
// criterion. Criteria 1-8 gate the exit code; criterion 9 is an end-to-end
// capability run whose outcome is reported but not gated.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "loglearn/runner.hpp"
#include "loglearn/transfer.hpp"
#include "oracles.hpp"

using namespace loglearn;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void verdict(int index, const std::string& name, bool ok, const std::string& detail,
             double seconds, bool gated = true) {
    std::printf("criterion %d (%s): %s%s  [%s, %.1fs]\n", index, name.c_str(),
                ok ? "PASS" : "FAIL", gated ? "" : " (documented, not gated)", detail.c_str(),
                seconds);
    std::fflush(stdout);
    if (gated && !ok) ++g_failures;
}

void run_criterion(int index, const std::string& name,
                   const std::function<bool(std::string&)>& body, bool gated = true) {
    auto t0 = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = false;
    try {
        ok = body(detail);
    } catch (const std::exception& e) {
        detail = std::string("exception: ") + e.what();
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    verdict(index, name, ok, detail, secs, gated);
}

fs::path scratch(const std::string& name) {
    fs::path dir = fs::path("acceptance_scratch") / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    return path.string();
}

// ---------------------------------------------------------------- criterion 1

bool check_gradients(std::string& detail) {
    auto rng = make_rng(101);
    double worst = 0.0;
    auto track = [&](double err) { worst = std::max(worst, err); };

    using testutil::max_grad_error;
    using testutil::random_tensor;

    for (int inst = 0; inst < 10; ++inst) {
        // plain loss functions on random leaves
        {
            NodePtr x = leaf(random_tensor({4, 3}, rng), true);
            NodePtr xh = leaf(random_tensor({4, 3}, rng), true);
            std::vector<NodePtr> leaves{x, xh};
            track(max_grad_error(leaves, [&] { return ae_loss(x, xh).node; }));
        }
        {
            NodePtr mu = leaf(random_tensor({5}, rng), true);
            Tensor s = random_tensor({5}, rng);
            for (int64_t i = 0; i < 5; ++i) s[i] = std::fabs(s[i]) + 0.5;
            NodePtr sigma = leaf(s, true);
            std::vector<NodePtr> leaves{mu, sigma};
            track(max_grad_error(leaves, [&] { return vae_kl_loss(mu, sigma).node; }));
        }
        {
            NodePtr a = leaf(random_tensor({6}, rng), true);
            NodePtr b = leaf(random_tensor({6}, rng), true);
            std::vector<NodePtr> leaves{a, b};
            track(max_grad_error(
                leaves, [&] { return aae_discriminator_loss(sigmoid(a), sigmoid(b)).node; }));
            track(max_grad_error(leaves, [&] { return aae_generator_loss(sigmoid(a)).node; }));
        }
        {
            NodePtr p = leaf(random_tensor({3, 4}, rng), true);
            NodePtr t = leaf(random_tensor({3, 4}, rng), true);
            std::vector<NodePtr> leaves{p, t};
            track(max_grad_error(leaves, [&] { return ar_loss(p, t).node; }));
        }
        {
            NodePtr zi = leaf(random_tensor({4}, rng), true);
            NodePtr zj = leaf(random_tensor({4}, rng), true);
            std::vector<NodePtr> leaves{zi, zj};
            Margin wide{50.0};  // keeps the hinge active at random distances
            track(max_grad_error(
                leaves, [&] { return contrastive_pair_loss(zi, zj, 1, wide).node; }));
            track(max_grad_error(
                leaves, [&] { return contrastive_pair_loss(zi, zj, 0, wide).node; }));
        }
        {
            NodePtr za = leaf(random_tensor({4}, rng), true);
            NodePtr zp = leaf(random_tensor({4}, rng), true);
            NodePtr zn = leaf(random_tensor({4}, rng), true);
            std::vector<NodePtr> leaves{za, zp, zn};
            Margin wide{50.0};
            track(max_grad_error(leaves,
                                 [&] { return triplet_loss(za, zp, zn, wide).node; }));
        }
        {
            NodePtr logits = leaf(random_tensor({3}, rng), true);
            std::vector<NodePtr> leaves{logits};
            track(max_grad_error(
                leaves, [&] { return classification_aux_loss(softmax(logits), 1).node; }));
        }
    }

    // both encoders with every head attached, gradients through the model
    for (EncoderKind kind : {EncoderKind::recurrent, EncoderKind::conv1d}) {
        ModelSpec spec;
        spec.encoder = kind;
        spec.embedding_dim = 3;
        spec.hidden = 4;
        spec.interval_len = 30;
        spec.decoder = true;
        spec.vae = true;
        spec.discriminator = true;
        spec.similarity = true;
        spec.ar_horizon = 2;
        spec.classes = 2;
        Model m = Model::init(spec, 55 + static_cast<int>(kind));
        std::vector<NodePtr> leaves;
        for (const auto& e : m.params().entries()) leaves.push_back(e.node);

        for (int inst = 0; inst < 10; ++inst) {
            Tensor x = random_tensor({30, 4}, rng);
            Tensor x2 = random_tensor({30, 4}, rng);
            Tensor eps = random_tensor({3}, rng);
            Tensor horizon = random_tensor({2, 4}, rng);

            track(max_grad_error(leaves, [&] {
                NodePtr in = constant(x);
                return ae_loss(in, m.decode_node(m.encode_node(in))).node;
            }));
            track(max_grad_error(leaves, [&] {
                NodePtr z, mu, sigma;
                m.vae_nodes(constant(x), eps, &z, &mu, &sigma);
                LossValue recon = ae_loss(constant(x), m.decode_node(z));
                return add(recon.node, vae_kl_loss(mu, sigma).node);
            }));
            track(max_grad_error(leaves, [&] {
                NodePtr d_fake = m.discriminate_node(m.encode_node(constant(x)));
                NodePtr d_real = m.discriminate_node(constant(eps));
                return aae_discriminator_loss(d_fake, d_real).node;
            }));
            track(max_grad_error(leaves, [&] {
                NodePtr pred = m.predict_next_node(m.encode_node(constant(x)));
                return ar_loss(pred, constant(horizon)).node;
            }));
            track(max_grad_error(leaves, [&] {
                return classification_aux_loss(m.classify_node(m.encode_node(constant(x))), 1)
                    .node;
            }));
            track(max_grad_error(leaves, [&] {
                NodePtr p = m.similarity_node(m.encode_node(constant(x)),
                                              m.encode_node(constant(x2)));
                return neg(log_op(p));
            }));
        }
    }

    std::ostringstream ss;
    ss << "worst relative error " << worst;
    detail = ss.str();
    return worst < 1e-4;
}

// ---------------------------------------------------------------- criterion 2

bool check_metric_oracles(std::string& detail) {
    double worst = 0.0;
    for (int n = 2; n <= 6; ++n) {
        auto labelings = oracle::all_labelings(n, 2);
        for (const auto& u : labelings)
            for (const auto& v : labelings) {
                worst = std::max(worst, std::fabs(ari(u, v) - oracle::ari(u, v)));
                worst = std::max(worst, std::fabs(ami(u, v) - oracle::ami(u, v)));
                worst = std::max(worst, std::fabs(v_measure(u, v) - oracle::v_measure(u, v)));
            }
    }
    bool exact_hand = ari({0, 0, 1, 1}, {0, 1, 0, 1}) == -0.5;
    std::ostringstream ss;
    ss << "worst oracle gap " << worst << ", hand case exact: " << (exact_hand ? "yes" : "no");
    detail = ss.str();
    return worst < 1e-9 && exact_hand;
}

// ---------------------------------------------------------------- criterion 3

bool check_closed_forms(std::string& detail) {
    Tensor x({2}), xh({2});
    x[0] = 1.0;
    x[1] = 2.0;
    bool ae_ok = ae_loss(constant(x), constant(xh)).scalar() == 5.0;

    Tensor mu({1}), sigma({1});
    mu[0] = 2.0;
    sigma[0] = 1.0;
    bool kl_ok = vae_kl_loss(constant(mu), constant(sigma)).scalar() == 2.0;

    Tensor half({4});
    for (int64_t i = 0; i < 4; ++i) half[i] = 0.5;
    double ld = aae_discriminator_loss(constant(half), constant(half)).scalar();
    bool ld_ok = std::fabs(ld - 2.0 * std::log(2.0)) <= 1e-12;

    ModelSpec spec;
    spec.embedding_dim = 3;
    spec.hidden = 4;
    spec.interval_len = 30;
    spec.decoder = true;
    Model source = Model::init(spec, 71);
    SourceAnchor anchor = SourceAnchor::from_model(source);
    Model target = Model::init(spec, 71);
    target.params().assign_values(anchor.w0());
    bool l2sp_ok = l2sp_penalty(target.params(), anchor.w0(), 1.0).scalar() == 0.0;

    Tensor diag({3, 3});
    diag.at(0, 0) = 3.0;
    diag.at(1, 1) = 2.0;
    diag.at(2, 2) = 1.0;
    bool bss_ok = std::fabs(bss_penalty(constant(diag), 1, 0.1).scalar() - 0.1) <= 1e-9;

    std::ostringstream ss;
    ss << "ae:" << ae_ok << " kl:" << kl_ok << " ld:" << ld_ok << " l2sp:" << l2sp_ok
       << " bss:" << bss_ok;
    detail = ss.str();
    return ae_ok && kl_ok && ld_ok && l2sp_ok && bss_ok;
}

// ---------------------------------------------------------------- criterion 4

std::string smoke_ini(const std::string& data, const std::string& objective,
                      const std::string& model_extra) {
    std::ostringstream ss;
    ss << "[data]\npath = " << data << "\n\n"
       << "[sampling]\ninterval_len = 50\nn = 256\n\n"
       << "[model]\nencoder = conv1d\nembedding_dim = 16\nhidden = 32\n"
       << model_extra << "\n"
       << "[train]\nobjective = " << objective << "\nepochs = 35\nbatch_size = 16\n\n"
       << "[eval]\nalgorithms = gmm\nrestarts = 3\nn_intervals = 128\nn_pairs = 64\n";
    return ss.str();
}

double gmm_best_ari(const MetricsReport& rep) {
    for (const auto& row : rep.rows)
        if (row.algorithm == "gmm" && row.mode == "best_of_restarts") return row.ari;
    return -1.0;
}

bool check_smoke_test(std::string& detail) {
    fs::path dir = scratch("smoke");
    auto wells = testutil::make_synthetic_wells(40, 400, 401);
    std::string data = (dir / "wells.csv").string();
    testutil::write_wells_csv(data, wells);

    struct Variant {
        const char* name;
        const char* objective;
        const char* model_extra;
    };
    std::vector<Variant> variants = {
        {"AE", "ae", "decoder = true\n"},
        {"VAE", "vae", "decoder = true\nvae = true\n"},
        {"AR", "ar", "ar_horizon = 3\n"},
        {"Triplet", "triplet", ""},
        {"Siamese", "siamese", "similarity = true\n"},
    };

    int good = 0;
    std::ostringstream ss;
    for (const auto& v : variants) {
        auto t0 = std::chrono::steady_clock::now();
        ExperimentConfig cfg = ExperimentConfig::from_flat(
            parse_config_text(smoke_ini(data, v.objective, v.model_extra)));
        MetricsReport rep = run_pretrain(cfg, 404, (dir / v.name).string());
        double a = gmm_best_ari(rep);
        double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (a >= 0.8) ++good;
        ss << v.name << "=" << a << " (" << static_cast<int>(secs) << "s) ";
        if (secs > 600.0) {
            detail = ss.str() + "- runtime budget exceeded";
            return false;
        }
    }
    detail = ss.str() + "-> " + std::to_string(good) + "/5 with ARI >= 0.8";
    return good >= 3;
}

// ---------------------------------------------------------------- criterion 5

constexpr int64_t kTransferLen = 50;

ModelSpec transfer_spec() {
    ModelSpec spec;
    spec.encoder = EncoderKind::conv1d;
    spec.embedding_dim = 16;
    spec.hidden = 32;
    spec.interval_len = static_cast<int>(kTransferLen);
    spec.decoder = true;
    return spec;
}

double regime_ari(const Model& m, const std::vector<WellRecord>& wells, uint64_t seed) {
    auto intervals = sample_intervals(wells, kTransferLen, 128, seed);
    std::map<std::string, std::string> formation;
    for (const auto& w : wells) formation[w.well_id] = w.formation;
    Tensor pts({static_cast<int64_t>(intervals.size()), m.spec().embedding_dim});
    Labeling truth;
    for (size_t i = 0; i < intervals.size(); ++i) {
        Tensor z = m.encode(intervals[i].values);
        for (int64_t j = 0; j < z.numel(); ++j) pts.at(static_cast<int64_t>(i), j) = z[j];
        truth.push_back(formation.at(intervals[i].well_id) == "F0" ? 0 : 1);
    }
    return ari(truth, gmm_cluster(pts, 2, 7));
}

bool check_transfer_properties(std::string& detail) {
    auto source_wells = testutil::make_synthetic_wells(20, 400, 501);
    auto target_wells = testutil::make_synthetic_wells(5, 400, 503);
    auto valid_wells = testutil::make_synthetic_wells(8, 400, 507);
    testutil::standardize_all(source_wells);
    testutil::standardize_all(target_wells);
    testutil::standardize_all(valid_wells);

    TrainingData source_data;
    source_data.intervals = sample_intervals(source_wells, kTransferLen, 256, 511);
    TrainingData target_data;
    target_data.intervals = sample_intervals(target_wells, kTransferLen, 128, 513);

    TrainSettings pre;
    pre.objective = Objective::ae;
    pre.epochs = 35;
    pre.lr = 0.001;
    pre.batch_size = 16;
    pre.seed = 3;
    Model source = Model::init(transfer_spec(), 521);
    if (train_model(source, source_data, pre).aborted) {
        detail = "source pretraining aborted";
        return false;
    }
    SourceAnchor anchor = SourceAnchor::from_model(source);

    TrainSettings fine;
    fine.objective = Objective::ae;
    fine.epochs = 15;
    fine.lr = 0.001;
    fine.batch_size = 16;
    fine.seed = 5;

    // (a) fine-tuning from the anchor matches the scratch run's final
    // validation ARI within at most half the epochs
    Model scr = Model::init(transfer_spec(), 523);
    transfer_fit(scr, target_data, &anchor, TransferConfig{}, fine);  // scratch
    double scratch_ari = regime_ari(scr, valid_wells, 541);

    Model ft = Model::init(transfer_spec(), 523);
    TransferConfig ft_cfg;
    ft_cfg.method = TransferMethod::fine_tune;
    TrainSettings one_epoch = fine;
    one_epoch.epochs = 1;
    transfer_fit(ft, target_data, &anchor, ft_cfg, one_epoch);
    double best_ft = regime_ari(ft, valid_wells, 541);
    for (int e = 2; e <= 7 && best_ft < scratch_ari; ++e) {
        one_epoch.seed = 5 + static_cast<uint64_t>(e);
        train_model(ft, target_data, one_epoch);
        best_ft = std::max(best_ft, regime_ari(ft, valid_wells, 541));
    }
    bool half_epochs_ok = best_ft >= scratch_ari;

    // (b) growing lambda never pushes the weights further from the anchor
    std::vector<double> dists;
    for (double lambda : {0.0, 1.0, 10.0, 100.0}) {
        Model reg = Model::init(transfer_spec(), 523);
        TransferConfig rc;
        rc.method = TransferMethod::l2sp;
        rc.lambda = lambda;
        transfer_fit(reg, target_data, &anchor, rc, fine);
        dists.push_back(std::sqrt(reg.params().squared_distance(anchor.w0())));
    }
    bool monotone_ok = true;
    for (size_t i = 1; i < dists.size(); ++i)
        if (dists[i] > 1.05 * dists[i - 1]) monotone_ok = false;

    // (c) the feature-map penalty is zero at the anchor, positive after a step
    Model probe = Model::init(transfer_spec(), 523);
    probe.params().assign_values(anchor.w0());
    std::vector<Tensor> batch;
    for (int i = 0; i < 2; ++i) batch.push_back(target_data.intervals[static_cast<size_t>(i)].values);
    auto layers = probe.feature_map_layers();
    double at_w0 = delta_penalty(probe, anchor, batch, layers).scalar();
    NodePtr in = constant(batch[0]);
    LossValue lv = ae_loss(in, probe.decode_node(probe.encode_node(in)));
    sgd_step(probe.params(), backward(lv.node, probe.params()), 0.05);
    double after_step = delta_penalty(probe, anchor, batch, layers).scalar();
    bool delta_ok = at_w0 <= 1e-12 && after_step > 0.0;

    std::ostringstream ss;
    ss << "scratch ARI " << scratch_ari << ", fine-tune ARI@<=7ep " << best_ft << "; |w-w0|: ";
    for (double d : dists) ss << d << " ";
    ss << "; delta " << at_w0 << " -> " << after_step;
    detail = ss.str();
    return half_epochs_ok && monotone_ok && delta_ok;
}

// ---------------------------------------------------------------- criterion 6

bool check_coincidence(std::string& detail) {
    auto wells = testutil::make_synthetic_wells(8, 300, 601);
    for (uint64_t seed : {1ull, 17ull, 901ull}) {
        PairingRule plain;
        PairingRule close;
        close.mode = PairingMode::close_well_linking;
        close.close_param = 1e9;  // above every well length
        auto a = sample_pairs(wells, 40, plain, 120, seed);
        auto b = sample_pairs(wells, 40, close, 120, seed);
        if (a.size() != b.size()) {
            detail = "pair counts differ";
            return false;
        }
        for (size_t i = 0; i < a.size(); ++i) {
            bool same = a[i].label == b[i].label && a[i].a.well_id == b[i].a.well_id &&
                        a[i].b.well_id == b[i].b.well_id &&
                        a[i].a.start_index == b[i].a.start_index &&
                        a[i].b.start_index == b[i].b.start_index;
            if (!same) {
                detail = "pair " + std::to_string(i) + " differs at seed " + std::to_string(seed);
                return false;
            }
        }
    }
    detail = "labels identical across 3 seeds";
    return true;
}

// ---------------------------------------------------------------- criterion 7

#ifdef LOGLEARN_CLI_PATH
int run_cli(const std::string& args) {
    std::string cmd = std::string(LOGLEARN_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    int status = std::system(cmd.c_str());
    return status == -1 ? -1 : WEXITSTATUS(status);
}

bool check_reproducibility(std::string& detail) {
    fs::path dir = scratch("repro");
    auto wells = testutil::make_synthetic_wells(8, 200, 701);
    std::string data = (dir / "wells.csv").string();
    testutil::write_wells_csv(data, wells);

    std::ostringstream ini;
    ini << "[data]\npath = " << data << "\n"
        << "[sampling]\ninterval_len = 30\nn = 48\n"
        << "[model]\nencoder = conv1d\nembedding_dim = 4\nhidden = 6\ndecoder = true\n"
        << "[train]\nobjective = ae\nepochs = 3\nbatch_size = 8\n"
        << "[eval]\nalgorithms = kmeans\nrestarts = 2\nn_intervals = 32\nn_pairs = 0\n";
    std::string cfg = write_text(dir / "cfg.ini", ini.str());

    std::string out = (dir / "run").string();
    std::string args = "pretrain --config " + cfg + " --seed 11 --out " + out;
    if (run_cli(args) != 0) {
        detail = "first pretrain run failed";
        return false;
    }
    std::map<std::string, std::string> first;
    for (const char* f : {"report.csv", "epochs.csv", "summary.txt", "model.ckpt"})
        first[f] = read_file(out + "/" + f);
    if (run_cli(args) != 0) {
        detail = "second pretrain run failed";
        return false;
    }
    for (const auto& [f, bytes] : first)
        if (read_file(out + "/" + f) != bytes) {
            detail = f + " differs between identical runs";
            return false;
        }

    // a second subcommand: export from the produced checkpoint
    std::string ecfg = write_text(dir / "export.ini",
                                  "checkpoint = " + out + "/model.ckpt\n" + ini.str());
    std::string eout = (dir / "exp").string();
    std::string eargs = "export --config " + ecfg + " --seed 11 --out " + eout;
    if (run_cli(eargs) != 0) {
        detail = "export run failed";
        return false;
    }
    std::string emb = read_file(eout + "/embeddings.csv");
    if (run_cli(eargs) != 0 || read_file(eout + "/embeddings.csv") != emb) {
        detail = "embeddings.csv differs between identical runs";
        return false;
    }
    detail = "pretrain and export byte-identical across reruns";
    return true;
}
#endif

// ---------------------------------------------------------------- criterion 8

bool check_em_monotonicity(std::string& detail) {
    auto rng = make_rng(801);
    double worst_drop = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        Tensor pts = testutil::random_tensor({50, 3}, rng);
        std::vector<double> trace;
        gmm_cluster(pts, 3, static_cast<uint64_t>(trial), 60, 1e-8, &trace);
        for (size_t i = 1; i < trace.size(); ++i)
            worst_drop = std::min(worst_drop, trace[i] - trace[i - 1]);
    }
    std::ostringstream ss;
    ss << "worst log-likelihood step " << worst_drop;
    detail = ss.str();
    return worst_drop >= -1e-9;
}

// ---------------------------------------------------------------- criterion 9

bool check_full_pipeline(std::string& detail) {
    fs::path dir = scratch("pipeline");
    auto source_wells = testutil::make_synthetic_wells(12, 250, 901);
    auto target_wells = testutil::make_synthetic_wells(8, 250, 907);
    std::string source_csv = (dir / "source.csv").string();
    std::string target_csv = (dir / "target.csv").string();
    testutil::write_wells_csv(source_csv, source_wells);
    testutil::write_wells_csv(target_csv, target_wells);

    std::string common =
        "[sampling]\ninterval_len = 30\nn = 64\n"
        "[model]\nencoder = conv1d\nembedding_dim = 8\nhidden = 12\ndecoder = true\n"
        "[train]\nobjective = ae\nepochs = 4\nbatch_size = 8\n"
        "[eval]\nalgorithms = kmeans, gmm\nrestarts = 2\nn_intervals = 48\nn_pairs = 0\n";

    ExperimentConfig pre = ExperimentConfig::from_flat(
        parse_config_text("[data]\npath = " + source_csv + "\n" + common));
    std::string pre_out = (dir / "pretrain").string();
    MetricsReport pr = run_pretrain(pre, 31, pre_out);

    ExperimentConfig tr = ExperimentConfig::from_flat(parse_config_text(
        "[data]\npath = " + target_csv + "\n" + common +
        "[transfer]\nmethod = l2sp\nlambda = 1\nanchor = " + pre_out + "/model.ckpt\n" +
        "epochs = 3\n"));
    std::string tr_out = (dir / "transfer").string();
    MetricsReport trr = run_transfer(tr, 31, tr_out);

    ExperimentConfig ev = ExperimentConfig::from_flat(parse_config_text(
        "checkpoint = " + tr_out + "/model.ckpt\n[data]\npath = " + target_csv + "\n" + common));
    MetricsReport evr = run_eval(ev, 31, (dir / "eval").string());

    // every stage must emit the report row structure: the CSV header plus one
    // single and one best-of-restarts row per clustering algorithm
    const std::string header =
        "run_id,config_hash,seed,split,target,algorithm,mode,ari,ami,v_measure,accuracy,"
        "roc_auc,pr_auc";
    for (const std::string& out : {pre_out, tr_out, (dir / "eval").string()}) {
        std::string report = read_file(out + "/report.csv");
        if (report.rfind(header, 0) != 0) {
            detail = "missing report header in " + out;
            return false;
        }
    }
    if (pr.rows.size() != 4 || trr.rows.size() != 4 || evr.rows.size() != 4) {
        detail = "unexpected row counts";
        return false;
    }
    std::ostringstream ss;
    ss << "pretrain/transfer/eval emitted " << pr.rows.size() << "/" << trr.rows.size() << "/"
       << evr.rows.size() << " metric rows";
    detail = ss.str();
    return true;
}

}  // namespace

int main() {
    run_criterion(1, "gradient correctness", check_gradients);
    run_criterion(2, "metric oracle equivalence", check_metric_oracles);
    run_criterion(3, "closed-form losses", check_closed_forms);
    run_criterion(4, "synthetic representation smoke test", check_smoke_test);
    run_criterion(5, "transfer behavior properties", check_transfer_properties);
    run_criterion(6, "close-well-linking coincidence", check_coincidence);
#ifdef LOGLEARN_CLI_PATH
    run_criterion(7, "reproducibility", check_reproducibility);
#endif
    run_criterion(8, "EM monotonicity", check_em_monotonicity);
    run_criterion(9, "full-data capability", check_full_pipeline, /*gated=*/false);

    if (g_failures > 0) {
        std::printf("%d gated criterion(s) failed\n", g_failures);
        return 1;
    }
    std::printf("all gated criteria passed\n");
    return 0;
}
