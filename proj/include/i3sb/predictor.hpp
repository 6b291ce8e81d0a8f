#pragma once

#include <map>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "i3sb/rng.hpp"
#include "i3sb/schedule.hpp"
#include "i3sb/tensor.hpp"

namespace i3sb {

// (clean, corrupted) training pair
using ImagePair = std::pair<ImageTensor, ImageTensor>;

// Conditioning for a prediction; xN is the corrupted image the trajectory
// started from. extras is reserved for additional named inputs and unused
// by the built-in predictors.
struct Condition {
    ImageTensor xN;
    std::map<std::string, ImageTensor> extras;
};

// Flat view of one prediction query. States are double buffers because the
// sampler keeps its trajectory in double precision; sigma_t/sigma_bar_t are
// the accumulated standard deviations at the query time.
struct PredictView {
    const double* x_t = nullptr;
    const double* x_corrupt = nullptr;
    std::uint32_t height = 0;
    std::uint32_t width = 0;
    std::uint32_t channels = 1;
    int step = 0;
    double t = 0.0;
    double sigma_t = 0.0;
    double sigma_bar_t = 0.0;

    std::size_t size() const {
        return static_cast<std::size_t>(height) * width * channels;
    }
};

// Predicts (X_t - X0) / sigma_t from the current state, the time, and the
// conditioning. Implementations must be pure and thread-safe after
// construction.
class EpsilonPredictor {
public:
    virtual ~EpsilonPredictor() = default;

    virtual void eval(const PredictView& v, std::span<double> out) const = 0;

    // Tensor-level convenience wrapper; fills the accumulated deviations
    // from the captured beta schedule and checks shapes and finiteness.
    ImageTensor predict(const ImageTensor& x_t, int n, double t,
                        const Condition& y) const;

    const BetaSchedule& beta() const { return beta_; }

protected:
    explicit EpsilonPredictor(BetaSchedule beta) : beta_(beta) {}
    BetaSchedule beta_;
};

// Test predictor that knows the true clean image, so the sampler's clean
// estimate is exact at every step.
std::unique_ptr<EpsilonPredictor> cheat_oracle(ImageTensor x0_true,
                                               BetaSchedule beta);

// Scalar-Gaussian data model: X0 ~ N(mu0, s0sq) per pixel and
// X1 = X0 + eta with eta ~ N(0, s1sq).
struct GaussianPairModel {
    double mu0 = 0.0;
    double s0sq = 1.0;
    double s1sq = 0.25;

    void validate() const;
};

// Exact minimizer of the training loss under the pair model: outputs
// (x_t - E[X0 | X_t, X1]) / sigma_t with the conditional mean in closed
// form from jointly Gaussian (X0, X_t, X1).
std::unique_ptr<EpsilonPredictor> gaussian_analytic_oracle(
    const GaussianPairModel& model, const Schedule& s);

// --- trainable patch network ---

// Two hidden ReLU layers (hidden_width 0 degenerates to a single linear
// map). Input: x_t patch, corrupted patch, then (sigma_t, sigma_bar_t);
// output: predicted target patch. Weights are 32-bit floats in one flat
// blob; forward/backward run in double.
struct TinyMlp {
    int patch = 5;
    int hidden_width = 64;
    std::vector<float> params;

    static TinyMlp create(int patch, int hidden_width, std::uint64_t seed);

    int input_dim() const { return 2 * patch * patch + 2; }
    int output_dim() const { return patch * patch; }
    std::size_t param_count() const;

    // y must hold output_dim() doubles
    void forward(std::span<const double> x, std::span<double> y) const;
};

struct MlpSample {
    std::vector<double> features;
    std::vector<double> target;
};

// Mean over the batch of the per-sample mean-squared output error; when
// grad is non-null it receives d(loss)/d(params), same length as params.
double mlp_loss_grad(const TinyMlp& net, std::span<const MlpSample> batch,
                     std::vector<double>* grad);

// One bridge-sampled training example: random pair, random interior patch,
// random interior grid step, state drawn from the bridge marginal.
MlpSample draw_bridge_sample(const std::vector<ImagePair>& pairs,
                             const Schedule& train_schedule, int patch,
                             RandomStream& rng);

struct AdamState {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::vector<double> m, v;
    long step_count = 0;

    void step(std::span<float> params, std::span<const double> grad);
};

struct TrainHyper {
    double lr = 1e-3;
    int batch = 32;
    int iters = 4000;
    std::uint64_t seed = 1;
    int log_every = 100;
    int patch = 5;
    int hidden_width = 64;
};

// (iteration, mean minibatch loss over the window ending there)
struct TrainLog {
    std::vector<std::pair<int, double>> entries;
};

// Bridge-regression training loop; throws std::runtime_error with the
// iteration index if the loss goes non-finite.
TinyMlp train_tiny_mlp(const std::vector<ImagePair>& pairs,
                       const Schedule& train_schedule, const TrainHyper& hyper,
                       TrainLog* log = nullptr);

// Sliding-window application with edge-replicate padding; each output
// pixel is the center of the network's patch prediction.
ImageTensor mlp_predict(const TinyMlp& net, const ImageTensor& x_t, int n,
                        double t, const Condition& y, const Schedule& s);

class MlpPredictor : public EpsilonPredictor {
public:
    MlpPredictor(TinyMlp net, BetaSchedule beta)
        : EpsilonPredictor(beta), net_(std::move(net)) {}

    void eval(const PredictView& v, std::span<double> out) const override;

    const TinyMlp& net() const { return net_; }

private:
    TinyMlp net_;
};

// Weights stored as one tensor-container file per layer plus a manifest
// listing layer order and dimensions.
void save_mlp(const TinyMlp& net, const std::string& dir);
TinyMlp load_mlp(const std::string& dir);

}  // namespace i3sb
