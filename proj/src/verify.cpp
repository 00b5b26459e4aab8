#include "verify.hpp"

#include <cmath>
#include <cstdint>
#include <sstream>

#include "adapter.hpp"
#include "kron.hpp"
#include "tasks.hpp"
#include "training.hpp"

namespace karst {

namespace {

std::string err_detail(const char* what, double worst, double tol) {
    std::ostringstream os;
    os << what << " max err " << worst << " (tol " << tol << ")";
    return os.str();
}

PropertyResult check_kron_materialize(SeededRng& rng) {
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const index_t p1 = 1 + static_cast<index_t>(rng.next_below(4));
        const index_t p2 = 1 + static_cast<index_t>(rng.next_below(4));
        const index_t q1 = 1 + static_cast<index_t>(rng.next_below(4));
        const index_t q2 = 1 + static_cast<index_t>(rng.next_below(4));
        DenseMatrix c = gaussian_matrix(rng, p1, q1, 1.0);
        DenseMatrix d = gaussian_matrix(rng, p2, q2, 1.0);
        DenseMatrix k = kron_materialize({c, d});
        for (index_t i = 0; i < k.rows; ++i) {
            for (index_t j = 0; j < k.cols; ++j) {
                const double want = c(i / p2, j / q2) * d(i % p2, j % q2);
                worst = std::max(worst, std::abs(k(i, j) - want));
            }
        }
    }
    return {"kron-materialize", worst == 0.0, err_detail("20 random pairs,", worst, 0.0)};
}

PropertyResult check_kron_apply(SeededRng& rng) {
    const double tol = 1e-12;
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const index_t p1 = 1 + static_cast<index_t>(rng.next_below(4));
        const index_t p2 = 1 + static_cast<index_t>(rng.next_below(4));
        const index_t q1 = 1 + static_cast<index_t>(rng.next_below(4));
        const index_t q2 = 1 + static_cast<index_t>(rng.next_below(4));
        KronPair pair{gaussian_matrix(rng, p1, q1, 1.0), gaussian_matrix(rng, p2, q2, 1.0)};
        DenseMatrix k = kron_materialize(pair);
        DenseVector x = gaussian_vector(rng, p1 * p2, 1.0);
        worst = std::max(worst, rel_error(kron_matvec_t(pair, x), matvec_t(k, x)));
        DenseVector v = gaussian_vector(rng, q1 * q2, 1.0);
        worst = std::max(worst, rel_error(kron_matvec(pair, v), matvec(k, v)));
    }
    return {"kron-apply", worst <= tol, err_detail("structured vs materialized,", worst, tol)};
}

PropertyResult check_zero_init(SeededRng& rng) {
    SeededRng init_rng(rng.next_u64());
    DenseMatrix w0 = gaussian_matrix(rng, 24, 16, 0.3);
    DenseVector bias = gaussian_vector(rng, 16, 0.3);
    AdaptedLinear layer(w0, bias, KarstAdapter::init(init_rng, 24, 16, 4, 3, 2, 0.02),
                        RescaleParams(16));
    double worst = 0.0;
    for (int t = 0; t < 200; ++t) {
        DenseVector x = gaussian_vector(rng, 24, 1.0);
        DenseVector base = matvec_t(w0, x);
        for (index_t j = 0; j < base.len(); ++j) base[j] += bias[j];
        worst = std::max(worst, max_abs_diff(layer.forward(x), base));
    }
    return {"zero-init", worst == 0.0, err_detail("200 inputs, fresh state,", worst, 0.0)};
}

PropertyResult check_merge(SeededRng& rng) {
    const double tol = 1e-10;
    double worst = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
        AdaptedLinear layer(gaussian_matrix(rng, 12, 8, 0.5), gaussian_vector(rng, 8, 0.5),
                            random_adapter(rng, 12, 8, 2, 3, 2, 0.4), random_rescale(rng, 8, 0.3));
        MergedAffine merged = merge(layer);
        for (int t = 0; t < 50; ++t) {
            DenseVector x = gaussian_vector(rng, 12, 1.0);
            worst = std::max(worst, rel_error(merged.forward(x), layer.forward(x)));
        }
    }
    return {"merge", worst <= tol, err_detail("5 layers x 50 inputs,", worst, tol)};
}

PropertyResult check_rescale_fold(SeededRng& rng) {
    const double tol = 1e-12;
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        RescaleParams p(gaussian_vector(rng, 10, 0.5), gaussian_vector(rng, 10, 0.5));
        DenseMatrix w = gaussian_matrix(rng, 7, 10, 1.0);
        DenseVector b = gaussian_vector(rng, 10, 1.0);
        FoldedAffine folded = rescale_fold(p, w, b);
        DenseVector x = gaussian_vector(rng, 7, 1.0);
        DenseVector direct = matvec_t(w, x);
        for (index_t j = 0; j < 10; ++j) direct[j] += b[j];
        direct = rescale_apply(p, direct);
        DenseVector via = matvec_t(folded.w, x);
        for (index_t j = 0; j < 10; ++j) via[j] += folded.bias[j];
        worst = std::max(worst, rel_error(via, direct));
    }
    return {"rescale-fold", worst <= tol, err_detail("20 trials,", worst, tol)};
}

PropertyResult check_gradcheck(SeededRng& rng) {
    SeededRng model_rng(rng.next_u64());
    ToyModel model = ToyModel::create(model_rng, {6, 4, 4}, 2, 2, 2, 0.05);
    // Perturb all trainable state so the check runs off the zero point.
    for (index_t l = 0; l < model.layer_count(); ++l) {
        for (KronKernel& k : model.layer(l).adapter().kernels())
            for (double& v : k.b.data) v = 0.1 * rng.next_gaussian();
        for (index_t j = 0; j < model.layer(l).rescale().s1.len(); ++j) {
            model.layer(l).rescale().s1[j] = 0.1 * rng.next_gaussian();
            model.layer(l).rescale().s2[j] = 0.1 * rng.next_gaussian();
        }
    }
    DenseMatrix x = gaussian_matrix(rng, 5, 6, 1.0);
    std::vector<int> labels = {0, 1, 2, 3, 1};
    GradcheckReport report = gradcheck(model, x, labels);
    std::ostringstream os;
    os << report.entries.size() << " tensors, worst rel err " << report.worst << " (tol "
       << report.tolerance << ")";
    return {"gradcheck", report.all_pass, os.str()};
}

PropertyResult check_rank(SeededRng& rng) {
    bool ok = true;
    std::ostringstream os;
    // Product law on full-rank factors.
    DenseMatrix c = gaussian_matrix(rng, 3, 2, 1.0);
    DenseMatrix d = gaussian_matrix(rng, 2, 4, 1.0);
    const index_t kr = rank_of(kron_materialize({c, d}));
    const index_t want = rank_of(c) * rank_of(d);
    if (kr != want) {
        ok = false;
        os << "kron rank " << kr << " != " << want << "; ";
    }
    // Adapter bound: rank <= min(N*m*r, d_in, d_out).
    KarstAdapter a = random_adapter(rng, 12, 8, 2, 2, 2, 0.5);
    const index_t bound = std::min<index_t>(2 * 2 * 2, std::min<index_t>(12, 8));
    const index_t got = rank_of(a.materialize());
    if (got > bound) {
        ok = false;
        os << "adapter rank " << got << " exceeds bound " << bound << "; ";
    }
    if (ok) os << "product law and bound hold (adapter rank " << got << " <= " << bound << ")";
    return {"rank", ok, os.str()};
}

PropertyResult check_determinism(SeededRng&) {
    TaskSpec spec;
    spec.recipe = "gaussian-blobs";
    spec.input_dim = 8;
    spec.classes = 2;
    spec.train_samples = 48;
    spec.test_samples = 24;
    TrainConfig cfg;
    cfg.m = 2;
    cfg.r = 2;
    cfg.epochs = 3;
    cfg.seed = 7;
    auto run = [&] {
        SyntheticTask task = make_task(spec, cfg.seed);
        SeededRng rng(cfg.seed);
        ToyModel model = ToyModel::create(rng, {8, 2}, cfg.m, cfg.r, cfg.n_kernels, cfg.init_std);
        return train(model, task, cfg);
    };
    TrainResult first = run();
    TrainResult second = run();
    bool same = first.history.size() == second.history.size();
    if (same) {
        for (std::size_t i = 0; i < first.history.size(); ++i) {
            same = same && first.history[i].train_loss == second.history[i].train_loss &&
                   first.history[i].train_acc == second.history[i].train_acc &&
                   first.history[i].test_acc == second.history[i].test_acc;
        }
    }
    return {"determinism", same,
            same ? "two seeded runs, bit-identical metric history" : "histories diverged"};
}

}  // namespace

VerifyReport run_verification(std::uint64_t seed) {
    SeededRng rng(seed);
    VerifyReport report;
    report.results.push_back(check_kron_materialize(rng));
    report.results.push_back(check_kron_apply(rng));
    report.results.push_back(check_zero_init(rng));
    report.results.push_back(check_merge(rng));
    report.results.push_back(check_rescale_fold(rng));
    report.results.push_back(check_gradcheck(rng));
    report.results.push_back(check_rank(rng));
    report.results.push_back(check_determinism(rng));
    for (const PropertyResult& r : report.results) report.all_pass = report.all_pass && r.pass;
    return report;
}

std::string VerifyReport::table() const {
    std::ostringstream os;
    for (const PropertyResult& r : results) {
        os << (r.pass ? "PASS" : "FAIL") << "  " << r.family;
        for (std::size_t i = r.family.size(); i < 18; ++i) os << ' ';
        os << r.detail << "\n";
    }
    os << (all_pass ? "all properties hold" : "VERIFICATION FAILED") << "\n";
    return os.str();
}

}  // namespace karst
