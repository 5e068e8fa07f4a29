#include "roved/envs.hpp"

#include <cmath>
#include <stdexcept>

#include "roved/rng.hpp"

namespace roved::envs {

TaskId task_from_string(const std::string& name) {
    if (name == "reach") return TaskId::reach;
    if (name == "push_to_target") return TaskId::push_to_target;
    if (name == "slide_open") return TaskId::slide_open;
    if (name == "slide_close") return TaskId::slide_close;
    throw std::invalid_argument("unknown task: " + name);
}

std::string to_string(TaskId id) {
    switch (id) {
        case TaskId::reach: return "reach";
        case TaskId::push_to_target: return "push_to_target";
        case TaskId::slide_open: return "slide_open";
        case TaskId::slide_close: return "slide_close";
    }
    return "?";
}

TaskSpec TaskSpec::make(TaskId id, int episode_length) {
    TaskSpec spec;
    spec.task_id = id;
    spec.episode_length = episode_length;
    spec.description_id = static_cast<int>(id);
    return spec;
}

Eigen::VectorXd EnvState::to_vector() const {
    Eigen::VectorXd v(kStateDim);
    v << hand(0), hand(1), object(0), object(1), target(0), target(1), grasp;
    return v;
}

namespace {

double clampd(double x, double lo, double hi) { return x < lo ? lo : (x > hi ? hi : x); }

Eigen::Vector2d clamp_arena(Eigen::Vector2d p) {
    p(0) = clampd(p(0), -kArenaBound, kArenaBound);
    p(1) = clampd(p(1), -kArenaBound, kArenaBound);
    return p;
}

bool is_slide(TaskId id) { return id == TaskId::slide_open || id == TaskId::slide_close; }

}  // namespace

EnvState env_reset(const TaskSpec& spec, std::uint64_t seed) {
    rng::Rng gen(rng::derive(seed, 0x7265'7365));
    EnvState s;
    s.hand(0) = gen.uniform(-0.9, -0.4);
    s.hand(1) = gen.uniform(-0.8, 0.8);
    switch (spec.task_id) {
        case TaskId::reach:
            s.object = s.hand;  // attached; the hand is the payload
            s.target(0) = gen.uniform(0.4, 0.9);
            s.target(1) = gen.uniform(-0.8, 0.8);
            break;
        case TaskId::push_to_target:
            s.object(0) = gen.uniform(-0.2, 0.2);
            s.object(1) = gen.uniform(-0.8, 0.8);
            s.target(0) = gen.uniform(0.4, 0.9);
            s.target(1) = gen.uniform(-0.8, 0.8);
            break;
        case TaskId::slide_open:
            s.object(0) = gen.uniform(-0.1, 0.1);
            s.object(1) = gen.uniform(-0.7, 0.7);
            s.target(0) = gen.uniform(0.55, 0.8);
            s.target(1) = s.object(1);  // rail
            break;
        case TaskId::slide_close:
            s.object(0) = gen.uniform(-0.1, 0.1);
            s.object(1) = gen.uniform(-0.7, 0.7);
            s.target(0) = gen.uniform(-0.8, -0.55);
            s.target(1) = s.object(1);
            break;
    }
    s.grasp = 0.0;
    s.step_index = 0;
    s.success_latched = false;
    return s;
}

StepResult env_step(const TaskSpec& spec, const EnvState& state,
                    const Eigen::Ref<const Eigen::VectorXd>& action) {
    if (action.size() != spec.action_dim) {
        throw std::invalid_argument("env_step: action dimension mismatch");
    }
    if (state.step_index >= spec.episode_length) {
        throw std::logic_error("env_step: episode already terminal");
    }
    Eigen::Vector4d a;
    for (int i = 0; i < 4; ++i) a(i) = clampd(action(i), -1.0, 1.0);

    EnvState next = state;
    const Eigen::Vector2d delta(kHandStep * a(0), kHandStep * a(1));
    next.hand = clamp_arena(state.hand + delta);
    next.grasp = 0.5 * (a(2) + 1.0);

    if (spec.task_id == TaskId::reach) {
        // payload rides with the hand until the task is done
        if (!state.success_latched) next.object = next.hand;
    } else if (!state.success_latched) {
        const bool contact = (state.hand - state.object).norm() <= kContactRadius;
        const bool engaged = next.grasp > 0.5;
        if (contact && engaged) {
            const Eigen::Vector2d moved = next.hand - state.hand;
            if (is_slide(spec.task_id)) {
                next.object(0) = clampd(state.object(0) + moved(0), -kRailBound, kRailBound);
            } else {
                next.object = clamp_arena(state.object + moved);
            }
        }
    }

    next.step_index = state.step_index + 1;
    const double dist_obj = (next.object - next.target).norm();
    const bool success_now = dist_obj < spec.success_radius;
    next.success_latched = state.success_latched || success_now;

    StepResult r;
    r.next_state = next;
    r.success = next.success_latched;
    r.true_reward = -dist_obj - 0.1 * (next.hand - next.object).norm() +
                    (next.success_latched ? 1.0 : 0.0);
    // loose analytic bound given arena geometry
    constexpr double kRewardFloor = -2.1 * 2.8284271247461903;  // -(2 + 0.1) * sqrt(8)
    if (!(r.true_reward >= kRewardFloor && r.true_reward <= 1.0)) {
        throw std::logic_error("env_step: per-step reward bound violated");
    }
    return r;
}

FeatureProjector::FeatureProjector(std::uint64_t gap_seed) : gap_seed_(gap_seed) {
    rng::Rng gen(rng::derive(gap_seed, 0x666561'74));
    task_weights_.resize(16, kStateDim);
    for (int i = 0; i < 16; ++i) {
        for (int j = 0; j < kStateDim; ++j) task_weights_(i, j) = gen.normal(0.0, 1.2);
    }
    task_phases_.resize(16);
    for (int i = 0; i < 16; ++i) task_phases_(i) = gen.uniform(0.0, 6.283185307179586);
    parity_gains_ = Eigen::VectorXd::Zero(16);
    time_gains_ = Eigen::VectorXd::Zero(16);
    distract_phases_.resize(16);
    for (int i = 0; i < 16; ++i) distract_phases_(i) = gen.uniform(0.0, 6.283185307179586);
    for (int i = 0; i < 6; ++i) parity_gains_(i) = gen.normal(0.0, 2.0);       // flicker
    for (int i = 6; i < 12; ++i) time_gains_(i) = gen.normal(0.0, 3.0);       // slow drift
    // channels 12..15 stay constant
}

Eigen::VectorXd FeatureProjector::features(const EnvState& state, int episode_length) const {
    Eigen::VectorXd out(kFeatureDim);
    const Eigen::VectorXd z = state.to_vector();
    Eigen::VectorXd arg = task_weights_ * z + task_phases_;
    for (int i = 0; i < 16; ++i) out(i) = std::sin(arg(i));
    const double parity = static_cast<double>(state.step_index % 2);
    const double tau = static_cast<double>(state.step_index) /
                       static_cast<double>(episode_length > 0 ? episode_length : 1);
    for (int i = 0; i < 16; ++i) {
        out(16 + i) = std::sin(parity_gains_(i) * parity + time_gains_(i) * tau +
                               distract_phases_(i));
    }
    return out;
}

Eigen::VectorXd render_features(const TaskSpec& spec, const EnvState& state,
                                std::uint64_t gap_seed) {
    return FeatureProjector(gap_seed).features(state, spec.episode_length);
}

double segment_true_return(const TaskSpec&, std::span<const Transition> steps) {
    double total = 0.0;
    for (const Transition& t : steps) total += t.true_reward;
    return total;
}

Eigen::Vector4d scripted_action(const TaskSpec& spec, const EnvState& state) {
    constexpr double kGain = 6.0;
    Eigen::Vector4d a = Eigen::Vector4d::Zero();
    auto steer = [&](const Eigen::Vector2d& dir) {
        a(0) = clampd(kGain * dir(0), -1.0, 1.0);
        a(1) = clampd(kGain * dir(1), -1.0, 1.0);
    };
    if (spec.task_id == TaskId::reach) {
        steer(state.target - state.hand);
        a(2) = -1.0;
        return a;
    }
    const bool holding = (state.hand - state.object).norm() <= 0.5 * kContactRadius;
    if (!holding) {
        steer(state.object - state.hand);
        a(2) = -1.0;
    } else {
        steer(state.target - state.object);
        a(2) = 1.0;
    }
    return a;
}

Transition Env::step(const EnvState& state,
                     const Eigen::Ref<const Eigen::VectorXd>& action) const {
    StepResult r = env_step(spec_, state, action);
    Transition t;
    t.state = state;
    for (int i = 0; i < 4; ++i) t.action(i) = clampd(action(i), -1.0, 1.0);
    t.next_state = r.next_state;
    t.true_reward = r.true_reward;
    t.success = r.success;
    t.obs_features = projector_.features(state, spec_.episode_length);
    t.next_obs_features = projector_.features(r.next_state, spec_.episode_length);
    return t;
}

}  // namespace roved::envs
