#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace roved::envs {

enum class TaskId { reach, push_to_target, slide_open, slide_close };

TaskId task_from_string(const std::string& name);
std::string to_string(TaskId id);

constexpr int kStateDim = 7;       // hand, object, target, grasp
constexpr int kActionDim = 4;      // dx, dy, grasp, unused slack
constexpr int kFeatureDim = 32;    // 16 task-relevant + 16 distractor
constexpr double kArenaBound = 1.0;
constexpr double kHandStep = 0.05;
constexpr double kContactRadius = 0.10;
constexpr double kRailBound = 0.85;

struct TaskSpec {
    TaskId task_id = TaskId::reach;
    int action_dim = kActionDim;
    int episode_length = 200;
    double success_radius = 0.10;
    int description_id = 0;  // token standing in for the language description

    static TaskSpec make(TaskId id, int episode_length = 200);
};

struct EnvState {
    Eigen::Vector2d hand = Eigen::Vector2d::Zero();
    Eigen::Vector2d object = Eigen::Vector2d::Zero();
    Eigen::Vector2d target = Eigen::Vector2d::Zero();
    double grasp = 0.0;  // in [0, 1]
    int step_index = 0;
    bool success_latched = false;

    Eigen::VectorXd to_vector() const;  // kStateDim entries for the policy
};

struct Transition {
    EnvState state;
    Eigen::Vector4d action = Eigen::Vector4d::Zero();
    EnvState next_state;
    double true_reward = 0.0;
    bool success = false;
    Eigen::VectorXd obs_features;
    Eigen::VectorXd next_obs_features;
};

// Fixed random sinusoidal projections standing in for a camera. Built once
// per gap_seed; features are a pure function of (state, gap_seed).
class FeatureProjector {
  public:
    explicit FeatureProjector(std::uint64_t gap_seed);

    Eigen::VectorXd features(const EnvState& state, int episode_length) const;
    std::uint64_t gap_seed() const { return gap_seed_; }

  private:
    std::uint64_t gap_seed_;
    Eigen::MatrixXd task_weights_;   // 16 x 7
    Eigen::VectorXd task_phases_;    // 16
    Eigen::VectorXd parity_gains_;   // 16
    Eigen::VectorXd time_gains_;     // 16
    Eigen::VectorXd distract_phases_;  // 16
};

EnvState env_reset(const TaskSpec& spec, std::uint64_t seed);

// Pure-functional kinematics step. Does not fill obs features.
struct StepResult {
    EnvState next_state;
    double true_reward = 0.0;
    bool success = false;
};
StepResult env_step(const TaskSpec& spec, const EnvState& state,
                    const Eigen::Ref<const Eigen::VectorXd>& action);

Eigen::VectorXd render_features(const TaskSpec& spec, const EnvState& state,
                                std::uint64_t gap_seed);

double segment_true_return(const TaskSpec& spec, std::span<const Transition> steps);

// Proportional controller that solves every task from any reset; used to
// verify the tasks are solvable and to generate expert trajectories.
Eigen::Vector4d scripted_action(const TaskSpec& spec, const EnvState& state);

// Convenience wrapper bundling the spec with a cached feature projector.
class Env {
  public:
    Env(TaskSpec spec, std::uint64_t gap_seed) : spec_(spec), projector_(gap_seed) {}

    const TaskSpec& spec() const { return spec_; }
    const FeatureProjector& projector() const { return projector_; }

    EnvState reset(std::uint64_t seed) const { return env_reset(spec_, seed); }
    Transition step(const EnvState& state, const Eigen::Ref<const Eigen::VectorXd>& action) const;

  private:
    TaskSpec spec_;
    FeatureProjector projector_;
};

}  // namespace roved::envs
