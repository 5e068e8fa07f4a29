#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace roved::nn {

enum class Activation { identity, relu, leaky_relu, tanh };

constexpr double kLeakySlope = 0.01;

Activation activation_from_string(const std::string& name);
std::string to_string(Activation a);

// Dense multilayer perceptron, 64-bit parameters, weights stored (out x in).
struct Mlp {
    std::vector<int> layer_sizes;
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;
    Activation hidden_activation = Activation::relu;
    Activation output_activation = Activation::identity;
    // bumped on every parameter mutation; forward caches are stamped with it
    std::uint64_t version = 0;

    int input_dim() const { return layer_sizes.front(); }
    int output_dim() const { return layer_sizes.back(); }
    std::size_t layer_count() const { return weights.size(); }
    std::size_t param_count() const;
};

// Scaled uniform fan-in init: W ~ U[-1/sqrt(fan_in), +1/sqrt(fan_in)], b = 0.
Mlp mlp_new(const std::vector<int>& layer_sizes, Activation hidden, Activation output,
            std::uint64_t seed);

struct ForwardCache {
    Eigen::MatrixXd input;                 // (in x batch)
    std::vector<Eigen::MatrixXd> preacts;  // z_l, one per layer
    std::vector<Eigen::MatrixXd> acts;     // a_l = act(z_l), one per layer
    std::uint64_t version = 0;
};

// Batched forward; inputs are columns. Fills `cache` when given.
Eigen::MatrixXd mlp_forward(const Mlp& mlp, const Eigen::Ref<const Eigen::MatrixXd>& input,
                            ForwardCache* cache = nullptr);
Eigen::VectorXd mlp_forward_vec(const Mlp& mlp, const Eigen::Ref<const Eigen::VectorXd>& input);

struct MlpGrads {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;

    void set_zero();
    void accumulate(const MlpGrads& other);
    void scale(double s);
    bool all_finite() const;
};

MlpGrads zero_grads_like(const Mlp& mlp);

// Backward pass for the forward recorded in `cache`. `output_grad` is dL/dy,
// (out x batch); parameter gradients are summed over the batch and
// accumulated into `grads`. Returns dL/dinput. Throws on a stale cache.
Eigen::MatrixXd mlp_backward(const Mlp& mlp, const ForwardCache& cache,
                             const Eigen::Ref<const Eigen::MatrixXd>& output_grad,
                             MlpGrads& grads);

struct AdamState {
    double learning_rate = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    long step = 0;
    std::vector<Eigen::MatrixXd> m_w, v_w;
    std::vector<Eigen::VectorXd> m_b, v_b;
};

AdamState adam_new(const Mlp& mlp, double learning_rate);

// Bias-corrected Adam update in place. Non-finite gradients leave the
// parameters and the optimizer state untouched and return false.
bool adam_step(AdamState& state, Mlp& mlp, const MlpGrads& grads);

// Scalar Adam, used for the SAC temperature.
struct ScalarAdam {
    double learning_rate = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    long step = 0;
    double m = 0.0;
    double v = 0.0;

    bool apply(double& param, double grad);
};

// Central finite-difference check of `analytic` against `loss`. Probes
// `probe_count` parameter coordinates (deterministic given probe_seed) and
// returns max |analytic - fd| / max(|analytic|, |fd|, 1e-8).
double grad_check(Mlp& mlp, const std::function<double(const Mlp&)>& loss,
                  const std::function<MlpGrads(const Mlp&)>& analytic, int probe_count, double h,
                  std::uint64_t probe_seed = 0);

bool all_finite(const Mlp& mlp);

// Versioned length-prefixed binary checkpoint; round-trips bit-exactly.
void save_mlp(std::ostream& out, const Mlp& mlp);
Mlp load_mlp(std::istream& in);
void save_mlp_file(const std::string& path, const Mlp& mlp);
Mlp load_mlp_file(const std::string& path);

}  // namespace roved::nn
