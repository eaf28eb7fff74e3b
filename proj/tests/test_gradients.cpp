#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"

#include "pmvc/graph.hpp"
#include "pmvc/objective.hpp"
#include "pmvc/trainer.hpp"

using namespace pmvc;

namespace {

struct Instance {
    MultiViewDataset ds;
    RelationGraph p;
    std::vector<Matrix> inputs;
    std::vector<int> members;
};

Instance make_instance(std::uint64_t seed, int v, int c, int k, int m) {
    auto rng = make_rng(seed);
    std::uniform_int_distribution<int> dim_pick(2, 8);
    std::uniform_int_distribution<int> n_pick(std::max(m, c * v + 2), 12);
    std::vector<int> dims;
    for (int w = 0; w < v; ++w) dims.push_back(dim_pick(rng));
    const int n = n_pick(rng);

    MaskSpec spec;
    spec.regime = v == 2 ? MaskSpec::Regime::TwoViewPaired : MaskSpec::Regime::PerViewRemoval;
    spec.p = v == 2 ? 60.0 : 25.0;
    spec.seed = seed;
    Instance inst{normalize(generate_synthetic(n, v, c, dims, 4.0, spec)), {}, {}, {}};
    inst.p = build_initial_graphs(inst.ds, k);
    for (int w = 0; w < v; ++w) inst.inputs.push_back(effective_inputs(inst.ds, inst.p, w));

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    inst.members.assign(order.begin(), order.begin() + m);
    return inst;
}

AutoencoderParams small_params(const MultiViewDataset& ds, std::uint64_t seed) {
    ArchitectureSpec arch;
    for (int w = 0; w < ds.num_views(); ++w) arch.input_dims.push_back(ds.dim(w));
    arch.hidden = {5, 4};
    arch.latent_dim = ds.num_clusters;
    return init_params(arch, seed);
}

void check_instance(std::uint64_t seed, const LossWeights& weights, WgcDenominator mode,
                    bool include_missing) {
    auto rng = make_rng(seed);
    std::uniform_int_distribution<int> v_pick(2, 3), c_pick(2, 3), k_pick(1, 2), m_pick(3, 6);
    const int v = v_pick(rng);
    Instance inst = make_instance(derive_seed(seed, 1), v, c_pick(rng), k_pick(rng), m_pick(rng));
    AutoencoderParams params = small_params(inst.ds, derive_seed(seed, 2));

    BatchObjective obj(inst.ds, inst.inputs, inst.p, inst.p, inst.members, weights, mode,
                       include_missing);
    ParamGrads grads = ParamGrads::zeros_like(params);
    obj.evaluate(params, &grads);
    const Vector analytic = grads.flatten();
    const Vector fd = oracles::fd_gradient(obj, params, 1e-5);
    const double err = oracles::rel_grad_error(analytic, fd);
    CAPTURE(seed);
    CHECK(err < 1e-4);
}

}  // namespace

TEST_CASE("all loss weights disabled give zero gradients") {
    Instance inst = make_instance(7, 2, 2, 2, 4);
    AutoencoderParams params = small_params(inst.ds, 3);
    LossWeights w;
    w.enable_rec = w.enable_wgc = w.enable_cgc = false;
    BatchObjective obj(inst.ds, inst.inputs, inst.p, inst.p, inst.members, w,
                       WgcDenominator::Literal, true);
    ParamGrads grads = ParamGrads::zeros_like(params);
    const auto bd = obj.evaluate(params, &grads);
    CHECK(bd.total == 0.0);
    CHECK(grads.flatten().norm() == 0.0);
}

TEST_CASE("single-layer linear autoencoder matches the closed-form gradient") {
    // One view, identity architecture: encoder z = W_e x, decoder xhat = W_d z,
    // squared error against x. dL/dW_d = 2 (xhat - x) z^T, dL/dW_e = 2 W_d^T (xhat - x) x^T.
    MultiViewDataset ds;
    ds.views.push_back((Matrix(2, 2) << 0.3, 0.7, 0.9, 0.1).finished());
    ds.mask = MaskMatrix::Ones(2, 2 - 1);
    ds.mask.resize(2, 1);
    ds.mask.setOnes();
    ds.num_clusters = 2;
    ds.validate();
    RelationGraph p = build_initial_graphs(ds, 1);

    ArchitectureSpec arch;
    arch.input_dims = {2};
    arch.hidden = {};
    arch.latent_dim = 2;
    arch.sigmoid_output = false;
    AutoencoderParams params = init_params(arch, 11);

    std::vector<Matrix> inputs = {ds.views[0]};
    LossWeights w;
    w.enable_wgc = w.enable_cgc = false;
    BatchObjective obj(ds, inputs, p, p, {0, 1}, w, WgcDenominator::Literal, true);
    ParamGrads grads = ParamGrads::zeros_like(params);
    obj.evaluate(params, &grads);

    const Matrix& we = params.views[0].encoder[0].w;
    const Matrix& wd = params.views[0].decoder[0].w;
    Matrix dwe = Matrix::Zero(2, 2), dwd = Matrix::Zero(2, 2);
    for (int i = 0; i < 2; ++i) {
        const Vector x = ds.views[0].row(i).transpose();
        const Vector z = we * x;
        const Vector xhat = wd * z;
        const Vector r = 2.0 * (xhat - x) / 2.0;  // mean over two samples, one view
        dwd += r * z.transpose();
        dwe += wd.transpose() * r * x.transpose();
    }
    CHECK((grads.views[0].decoder[0].w - dwd).norm() < 1e-12);
    CHECK((grads.views[0].encoder[0].w - dwe).norm() < 1e-12);
}

TEST_CASE("reconstruction loss gradient matches finite differences") {
    LossWeights w;
    w.enable_wgc = w.enable_cgc = false;
    for (std::uint64_t seed = 100; seed < 106; ++seed)
        check_instance(seed, w, WgcDenominator::Literal, true);
}

TEST_CASE("within-view contrastive gradient matches finite differences") {
    LossWeights w;
    w.enable_rec = w.enable_cgc = false;
    for (std::uint64_t seed = 200; seed < 206; ++seed)
        check_instance(seed, w, WgcDenominator::Literal, true);
}

TEST_CASE("cross-view consistency gradient matches finite differences") {
    LossWeights w;
    w.enable_rec = w.enable_wgc = false;
    for (std::uint64_t seed = 300; seed < 306; ++seed)
        check_instance(seed, w, WgcDenominator::Literal, true);
}

TEST_CASE("combined objective gradient matches finite differences") {
    LossWeights w;
    w.alpha = 0.37;
    w.beta = 0.21;
    for (std::uint64_t seed = 400; seed < 406; ++seed)
        check_instance(seed, w, WgcDenominator::Literal, true);
}

TEST_CASE("gradients hold for the exclude-self and missing-excluded variants") {
    LossWeights w;
    w.alpha = 0.5;
    w.beta = 0.3;
    for (std::uint64_t seed = 500; seed < 503; ++seed)
        check_instance(seed, w, WgcDenominator::ExcludeSelf, true);
    for (std::uint64_t seed = 520; seed < 523; ++seed)
        check_instance(seed, w, WgcDenominator::Literal, false);
}
