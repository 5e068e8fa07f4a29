#include "roved/nn.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "roved/rng.hpp"

namespace roved::nn {

Activation activation_from_string(const std::string& name) {
    if (name == "identity") return Activation::identity;
    if (name == "relu") return Activation::relu;
    if (name == "leaky_relu") return Activation::leaky_relu;
    if (name == "tanh") return Activation::tanh;
    throw std::invalid_argument("unknown activation: " + name);
}

std::string to_string(Activation a) {
    switch (a) {
        case Activation::identity: return "identity";
        case Activation::relu: return "relu";
        case Activation::leaky_relu: return "leaky_relu";
        case Activation::tanh: return "tanh";
    }
    return "?";
}

namespace {

void apply_activation(Activation a, Eigen::MatrixXd& z) {
    switch (a) {
        case Activation::identity:
            return;
        case Activation::relu:
            z = z.cwiseMax(0.0);
            return;
        case Activation::leaky_relu:
            z = z.cwiseMax(kLeakySlope * z);
            return;
        case Activation::tanh:
            z = z.array().tanh().matrix();
            return;
    }
}

// derivative expressed from preactivation z and activation value a
Eigen::MatrixXd activation_grad(Activation act, const Eigen::MatrixXd& z,
                                const Eigen::MatrixXd& a) {
    switch (act) {
        case Activation::identity:
            return Eigen::MatrixXd::Ones(z.rows(), z.cols());
        case Activation::relu:
            return (z.array() > 0.0).cast<double>().matrix();
        case Activation::leaky_relu:
            return (z.array() > 0.0).select(Eigen::MatrixXd::Ones(z.rows(), z.cols()),
                                            Eigen::MatrixXd::Constant(z.rows(), z.cols(),
                                                                      kLeakySlope));
        case Activation::tanh:
            return (1.0 - a.array().square()).matrix();
    }
    return {};
}

}  // namespace

std::size_t Mlp::param_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        n += static_cast<std::size_t>(weights[l].size()) +
             static_cast<std::size_t>(biases[l].size());
    }
    return n;
}

Mlp mlp_new(const std::vector<int>& layer_sizes, Activation hidden, Activation output,
            std::uint64_t seed) {
    if (layer_sizes.size() < 2) {
        throw std::invalid_argument("mlp_new: need at least input and output layer sizes");
    }
    for (int s : layer_sizes) {
        if (s <= 0) throw std::invalid_argument("mlp_new: layer sizes must be positive");
    }
    Mlp mlp;
    mlp.layer_sizes = layer_sizes;
    mlp.hidden_activation = hidden;
    mlp.output_activation = output;
    rng::Rng gen(rng::derive(seed, 0x6d6c70));
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
        const int fan_in = layer_sizes[l];
        const int fan_out = layer_sizes[l + 1];
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        Eigen::MatrixXd w(fan_out, fan_in);
        for (int i = 0; i < fan_out; ++i) {
            for (int j = 0; j < fan_in; ++j) {
                w(i, j) = gen.uniform(-bound, bound);
            }
        }
        mlp.weights.push_back(std::move(w));
        mlp.biases.emplace_back(Eigen::VectorXd::Zero(fan_out));
    }
    return mlp;
}

Eigen::MatrixXd mlp_forward(const Mlp& mlp, const Eigen::Ref<const Eigen::MatrixXd>& input,
                            ForwardCache* cache) {
    if (input.rows() != mlp.input_dim()) {
        std::ostringstream msg;
        msg << "mlp_forward: input dim " << input.rows() << " != " << mlp.input_dim();
        throw std::invalid_argument(msg.str());
    }
    if (cache) {
        cache->input = input;
        cache->preacts.clear();
        cache->acts.clear();
        cache->version = mlp.version;
    }
    Eigen::MatrixXd a = input;
    const std::size_t last = mlp.layer_count() - 1;
    for (std::size_t l = 0; l <= last; ++l) {
        Eigen::MatrixXd z = mlp.weights[l] * a;
        z.colwise() += mlp.biases[l];
        if (cache) cache->preacts.push_back(z);
        apply_activation(l == last ? mlp.output_activation : mlp.hidden_activation, z);
        if (cache) cache->acts.push_back(z);
        a = std::move(z);
    }
    return a;
}

Eigen::VectorXd mlp_forward_vec(const Mlp& mlp, const Eigen::Ref<const Eigen::VectorXd>& input) {
    return mlp_forward(mlp, input, nullptr).col(0);
}

void MlpGrads::set_zero() {
    for (auto& w : weights) w.setZero();
    for (auto& b : biases) b.setZero();
}

void MlpGrads::accumulate(const MlpGrads& other) {
    for (std::size_t l = 0; l < weights.size(); ++l) {
        weights[l] += other.weights[l];
        biases[l] += other.biases[l];
    }
}

void MlpGrads::scale(double s) {
    for (auto& w : weights) w *= s;
    for (auto& b : biases) b *= s;
}

bool MlpGrads::all_finite() const {
    for (const auto& w : weights) {
        if (!w.allFinite()) return false;
    }
    for (const auto& b : biases) {
        if (!b.allFinite()) return false;
    }
    return true;
}

MlpGrads zero_grads_like(const Mlp& mlp) {
    MlpGrads g;
    for (std::size_t l = 0; l < mlp.layer_count(); ++l) {
        g.weights.emplace_back(Eigen::MatrixXd::Zero(mlp.weights[l].rows(), mlp.weights[l].cols()));
        g.biases.emplace_back(Eigen::VectorXd::Zero(mlp.biases[l].size()));
    }
    return g;
}

Eigen::MatrixXd mlp_backward(const Mlp& mlp, const ForwardCache& cache,
                             const Eigen::Ref<const Eigen::MatrixXd>& output_grad,
                             MlpGrads& grads) {
    if (cache.version != mlp.version) {
        throw std::logic_error("mlp_backward: forward cache is stale (parameter version mismatch)");
    }
    const std::size_t last = mlp.layer_count() - 1;
    if (output_grad.rows() != mlp.output_dim() || output_grad.cols() != cache.input.cols()) {
        throw std::invalid_argument("mlp_backward: output_grad shape mismatch");
    }
    Eigen::MatrixXd delta =
        output_grad.cwiseProduct(activation_grad(mlp.output_activation, cache.preacts[last],
                                                 cache.acts[last]));
    for (std::size_t l = last + 1; l-- > 0;) {
        const Eigen::MatrixXd& below = (l == 0) ? cache.input : cache.acts[l - 1];
        grads.weights[l].noalias() += delta * below.transpose();
        grads.biases[l] += delta.rowwise().sum();
        if (l == 0) break;
        Eigen::MatrixXd prev = mlp.weights[l].transpose() * delta;
        delta = prev.cwiseProduct(activation_grad(mlp.hidden_activation, cache.preacts[l - 1],
                                                  cache.acts[l - 1]));
    }
    return mlp.weights[0].transpose() * delta;
}

AdamState adam_new(const Mlp& mlp, double learning_rate) {
    AdamState s;
    s.learning_rate = learning_rate;
    for (std::size_t l = 0; l < mlp.layer_count(); ++l) {
        s.m_w.emplace_back(Eigen::MatrixXd::Zero(mlp.weights[l].rows(), mlp.weights[l].cols()));
        s.v_w.emplace_back(Eigen::MatrixXd::Zero(mlp.weights[l].rows(), mlp.weights[l].cols()));
        s.m_b.emplace_back(Eigen::VectorXd::Zero(mlp.biases[l].size()));
        s.v_b.emplace_back(Eigen::VectorXd::Zero(mlp.biases[l].size()));
    }
    return s;
}

bool adam_step(AdamState& state, Mlp& mlp, const MlpGrads& grads) {
    if (!grads.all_finite()) return false;
    state.step += 1;
    const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t l = 0; l < mlp.layer_count(); ++l) {
        state.m_w[l] = state.beta1 * state.m_w[l] + (1.0 - state.beta1) * grads.weights[l];
        state.v_w[l] = state.beta2 * state.v_w[l] +
                       (1.0 - state.beta2) * grads.weights[l].cwiseProduct(grads.weights[l]);
        mlp.weights[l].array() -= state.learning_rate * (state.m_w[l].array() / c1) /
                                  ((state.v_w[l].array() / c2).sqrt() + state.epsilon);
        state.m_b[l] = state.beta1 * state.m_b[l] + (1.0 - state.beta1) * grads.biases[l];
        state.v_b[l] = state.beta2 * state.v_b[l] +
                       (1.0 - state.beta2) * grads.biases[l].cwiseProduct(grads.biases[l]);
        mlp.biases[l].array() -= state.learning_rate * (state.m_b[l].array() / c1) /
                                 ((state.v_b[l].array() / c2).sqrt() + state.epsilon);
    }
    mlp.version += 1;
    return true;
}

bool ScalarAdam::apply(double& param, double grad) {
    if (!std::isfinite(grad)) return false;
    step += 1;
    m = beta1 * m + (1.0 - beta1) * grad;
    v = beta2 * v + (1.0 - beta2) * grad * grad;
    const double mh = m / (1.0 - std::pow(beta1, static_cast<double>(step)));
    const double vh = v / (1.0 - std::pow(beta2, static_cast<double>(step)));
    param -= learning_rate * mh / (std::sqrt(vh) + epsilon);
    return true;
}

bool all_finite(const Mlp& mlp) {
    for (const auto& w : mlp.weights) {
        if (!w.allFinite()) return false;
    }
    for (const auto& b : mlp.biases) {
        if (!b.allFinite()) return false;
    }
    return true;
}

namespace {

double* param_coord(Mlp& mlp, std::size_t flat) {
    for (std::size_t l = 0; l < mlp.layer_count(); ++l) {
        const std::size_t nw = static_cast<std::size_t>(mlp.weights[l].size());
        if (flat < nw) return mlp.weights[l].data() + flat;
        flat -= nw;
        const std::size_t nb = static_cast<std::size_t>(mlp.biases[l].size());
        if (flat < nb) return mlp.biases[l].data() + flat;
        flat -= nb;
    }
    throw std::logic_error("param_coord: index out of range");
}

double grad_coord(const MlpGrads& g, std::size_t flat) {
    for (std::size_t l = 0; l < g.weights.size(); ++l) {
        const std::size_t nw = static_cast<std::size_t>(g.weights[l].size());
        if (flat < nw) return g.weights[l].data()[flat];
        flat -= nw;
        const std::size_t nb = static_cast<std::size_t>(g.biases[l].size());
        if (flat < nb) return g.biases[l].data()[flat];
        flat -= nb;
    }
    throw std::logic_error("grad_coord: index out of range");
}

}  // namespace

double grad_check(Mlp& mlp, const std::function<double(const Mlp&)>& loss,
                  const std::function<MlpGrads(const Mlp&)>& analytic, int probe_count, double h,
                  std::uint64_t probe_seed) {
    const MlpGrads grads = analytic(mlp);
    const std::size_t total = mlp.param_count();
    rng::Rng gen(rng::derive(probe_seed, 0x67636b));
    std::vector<std::size_t> coords;
    if (static_cast<std::size_t>(probe_count) >= total) {
        coords.resize(total);
        for (std::size_t i = 0; i < total; ++i) coords[i] = i;
    } else {
        coords = gen.sample_without_replacement(total, static_cast<std::size_t>(probe_count));
    }
    double worst = 0.0;
    const std::uint64_t version = mlp.version;
    for (std::size_t flat : coords) {
        double* p = param_coord(mlp, flat);
        const double saved = *p;
        *p = saved + h;
        const double up = loss(mlp);
        *p = saved - h;
        const double down = loss(mlp);
        *p = saved;
        const double fd = (up - down) / (2.0 * h);
        const double an = grad_coord(grads, flat);
        const double rel = std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-8});
        worst = std::max(worst, rel);
    }
    mlp.version = version;  // probing restored every coordinate
    return worst;
}

namespace {

constexpr std::uint32_t kMagic = 0x4b43'5652;  // "RVCK"
constexpr std::uint32_t kVersion = 1;

template <class T>
void write_pod(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_pod(std::istream& in) {
    T v;
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw std::runtime_error("checkpoint: truncated stream");
    return v;
}

// row-major on disk
void write_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
    write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(m.size()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            write_pod<double>(out, m(i, j));
        }
    }
}

void read_matrix(std::istream& in, Eigen::MatrixXd& m) {
    const auto n = read_pod<std::uint64_t>(in);
    if (n != static_cast<std::uint64_t>(m.size())) {
        throw std::runtime_error("checkpoint: matrix length mismatch");
    }
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            m(i, j) = read_pod<double>(in);
        }
    }
}

}  // namespace

void save_mlp(std::ostream& out, const Mlp& mlp) {
    write_pod(out, kMagic);
    write_pod(out, kVersion);
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(mlp.layer_sizes.size()));
    for (int s : mlp.layer_sizes) write_pod<std::int32_t>(out, s);
    write_pod<std::uint8_t>(out, static_cast<std::uint8_t>(mlp.hidden_activation));
    write_pod<std::uint8_t>(out, static_cast<std::uint8_t>(mlp.output_activation));
    for (std::size_t l = 0; l < mlp.layer_count(); ++l) {
        write_matrix(out, mlp.weights[l]);
        Eigen::MatrixXd b = mlp.biases[l];
        write_matrix(out, b);
    }
}

Mlp load_mlp(std::istream& in) {
    if (read_pod<std::uint32_t>(in) != kMagic) throw std::runtime_error("checkpoint: bad magic");
    if (read_pod<std::uint32_t>(in) != kVersion) {
        throw std::runtime_error("checkpoint: unsupported version");
    }
    const auto n_sizes = read_pod<std::uint32_t>(in);
    if (n_sizes < 2 || n_sizes > 64) throw std::runtime_error("checkpoint: bad layer count");
    std::vector<int> sizes(n_sizes);
    for (auto& s : sizes) {
        s = read_pod<std::int32_t>(in);
        if (s <= 0) throw std::runtime_error("checkpoint: bad layer size");
    }
    const auto hid = static_cast<Activation>(read_pod<std::uint8_t>(in));
    const auto out_act = static_cast<Activation>(read_pod<std::uint8_t>(in));
    Mlp mlp = mlp_new(sizes, hid, out_act, 0);
    for (std::size_t l = 0; l < mlp.layer_count(); ++l) {
        read_matrix(in, mlp.weights[l]);
        Eigen::MatrixXd b(mlp.biases[l].size(), 1);
        read_matrix(in, b);
        mlp.biases[l] = b.col(0);
    }
    return mlp;
}

void save_mlp_file(const std::string& path, const Mlp& mlp) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for write: " + path);
    save_mlp(out, mlp);
}

Mlp load_mlp_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for read: " + path);
    return load_mlp(in);
}

}  // namespace roved::nn
