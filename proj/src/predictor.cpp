#include "i3sb/predictor.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "i3sb/tensor_io.hpp"

namespace i3sb {

namespace {

void require_positive_sigma(double sigma_t, const char* who) {
    if (!(sigma_t > 0.0)) {
        throw std::domain_error(std::string(who) +
                                ": query at sigma_t = 0 (t at the clean endpoint)");
    }
}

}  // namespace

ImageTensor EpsilonPredictor::predict(const ImageTensor& x_t, int n, double t,
                                      const Condition& y) const {
    x_t.validate();
    if (!y.xN.same_shape(x_t)) {
        throw std::invalid_argument("predict: condition shape mismatch");
    }
    const double total = beta_.total();
    const double s2 = beta_.integral(t);
    PredictView v;
    std::vector<double> xs(x_t.data.begin(), x_t.data.end());
    std::vector<double> cs(y.xN.data.begin(), y.xN.data.end());
    v.x_t = xs.data();
    v.x_corrupt = cs.data();
    v.height = x_t.height;
    v.width = x_t.width;
    v.channels = x_t.channels;
    v.step = n;
    v.t = t;
    v.sigma_t = std::sqrt(s2);
    v.sigma_bar_t = std::sqrt(std::max(total - s2, 0.0));
    require_positive_sigma(v.sigma_t, "predict");
    std::vector<double> out(v.size());
    eval(v, out);
    ImageTensor result = x_t;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!std::isfinite(out[i])) {
            throw std::runtime_error("predict: non-finite output");
        }
        result.data[i] = static_cast<float>(out[i]);
    }
    return result;
}

namespace {

class CheatOracle final : public EpsilonPredictor {
public:
    CheatOracle(ImageTensor x0, BetaSchedule beta)
        : EpsilonPredictor(beta), x0_(std::move(x0)) {
        x0_.validate();
    }

    void eval(const PredictView& v, std::span<double> out) const override {
        require_positive_sigma(v.sigma_t, "cheat_oracle");
        if (v.size() != x0_.data.size()) {
            throw std::invalid_argument("cheat_oracle: state shape mismatch");
        }
        const double inv = 1.0 / v.sigma_t;
        for (std::size_t i = 0; i < out.size(); ++i) {
            out[i] = (v.x_t[i] - static_cast<double>(x0_.data[i])) * inv;
        }
    }

private:
    ImageTensor x0_;
};

class AnalyticOracle final : public EpsilonPredictor {
public:
    AnalyticOracle(const GaussianPairModel& m, BetaSchedule beta)
        : EpsilonPredictor(beta), model_(m) {
        model_.validate();
    }

    // E[X0 | X_t, X1] by completing the square in x0 over the product of
    // the prior, the corruption likelihood, and the bridge likelihood:
    //   precision = 1/s0sq + 1/s1sq + wbar/sigma2
    //   mean * precision = mu0/s0sq + x1/s1sq + (x_t - w*x1)/sigma2
    // with w = sigma2/(sigma2+sbar2) and wbar = 1 - w. The bridge term
    // vanishes smoothly as t -> 1.
    void eval(const PredictView& v, std::span<double> out) const override {
        require_positive_sigma(v.sigma_t, "gaussian_analytic_oracle");
        const double s2 = v.sigma_t * v.sigma_t;
        const double b2 = v.sigma_bar_t * v.sigma_bar_t;
        const double w = s2 / (s2 + b2);
        const double wbar = b2 / (s2 + b2);
        const double precision =
            1.0 / model_.s0sq + 1.0 / model_.s1sq + wbar / s2;
        const double prior_term = model_.mu0 / model_.s0sq;
        const double inv_sigma = 1.0 / v.sigma_t;
        for (std::size_t i = 0; i < out.size(); ++i) {
            const double xt = v.x_t[i];
            const double x1 = v.x_corrupt[i];
            const double m0 =
                (prior_term + x1 / model_.s1sq + (xt - w * x1) / s2) / precision;
            out[i] = (xt - m0) * inv_sigma;
        }
    }

private:
    GaussianPairModel model_;
};

}  // namespace

void GaussianPairModel::validate() const {
    if (!(s0sq > 0.0) || !(s1sq > 0.0)) {
        throw std::invalid_argument("GaussianPairModel: variances must be positive");
    }
}

std::unique_ptr<EpsilonPredictor> cheat_oracle(ImageTensor x0_true,
                                               BetaSchedule beta) {
    return std::make_unique<CheatOracle>(std::move(x0_true), beta);
}

std::unique_ptr<EpsilonPredictor> gaussian_analytic_oracle(
    const GaussianPairModel& model, const Schedule& s) {
    return std::make_unique<AnalyticOracle>(model, s.beta);
}

// --- TinyMlp ---

namespace {

struct Layout {
    int in = 0, hidden = 0, out = 0;
    std::size_t w1 = 0, b1 = 0, w2 = 0, b2 = 0, w3 = 0, b3 = 0, total = 0;
};

Layout layout_of(const TinyMlp& net) {
    Layout l;
    l.in = net.input_dim();
    l.hidden = net.hidden_width;
    l.out = net.output_dim();
    if (l.hidden == 0) {
        l.w1 = 0;
        l.b1 = static_cast<std::size_t>(l.out) * l.in;
        l.total = l.b1 + l.out;
        return l;
    }
    l.w1 = 0;
    l.b1 = l.w1 + static_cast<std::size_t>(l.hidden) * l.in;
    l.w2 = l.b1 + l.hidden;
    l.b2 = l.w2 + static_cast<std::size_t>(l.hidden) * l.hidden;
    l.w3 = l.b2 + l.hidden;
    l.b3 = l.w3 + static_cast<std::size_t>(l.out) * l.hidden;
    l.total = l.b3 + l.out;
    return l;
}

// y = W x + b, W row-major [rows][cols]
void affine(const float* w, const float* b, std::span<const double> x, int rows,
            int cols, double* y) {
    for (int r = 0; r < rows; ++r) {
        double acc = b[r];
        const float* wr = w + static_cast<std::size_t>(r) * cols;
        for (int c = 0; c < cols; ++c) acc += static_cast<double>(wr[c]) * x[c];
        y[r] = acc;
    }
}

}  // namespace

std::size_t TinyMlp::param_count() const { return layout_of(*this).total; }

TinyMlp TinyMlp::create(int patch, int hidden_width, std::uint64_t seed) {
    if (patch < 1 || patch % 2 == 0) {
        throw std::invalid_argument("TinyMlp: patch side must be odd and positive");
    }
    if (hidden_width < 0) throw std::invalid_argument("TinyMlp: negative width");
    TinyMlp net;
    net.patch = patch;
    net.hidden_width = hidden_width;
    const Layout l = layout_of(net);
    net.params.assign(l.total, 0.0f);
    RandomStream rng(seed);
    auto fill = [&](std::size_t off, int rows, int cols) {
        const double a = std::sqrt(6.0 / (rows + cols));
        for (std::size_t i = 0; i < static_cast<std::size_t>(rows) * cols; ++i) {
            net.params[off + i] = static_cast<float>((2.0 * rng.uniform() - 1.0) * a);
        }
    };
    if (hidden_width == 0) {
        fill(l.w1, l.out, l.in);
    } else {
        fill(l.w1, l.hidden, l.in);
        fill(l.w2, l.hidden, l.hidden);
        fill(l.w3, l.out, l.hidden);
    }
    return net;
}

void TinyMlp::forward(std::span<const double> x, std::span<double> y) const {
    const Layout l = layout_of(*this);
    if (x.size() != static_cast<std::size_t>(l.in) ||
        y.size() != static_cast<std::size_t>(l.out)) {
        throw std::invalid_argument("TinyMlp::forward: dimension mismatch");
    }
    const float* p = params.data();
    if (l.hidden == 0) {
        affine(p + l.w1, p + l.b1, x, l.out, l.in, y.data());
        return;
    }
    std::vector<double> h1(l.hidden), h2(l.hidden);
    affine(p + l.w1, p + l.b1, x, l.hidden, l.in, h1.data());
    for (double& v : h1) v = v > 0.0 ? v : 0.0;
    affine(p + l.w2, p + l.b2, h1, l.hidden, l.hidden, h2.data());
    for (double& v : h2) v = v > 0.0 ? v : 0.0;
    affine(p + l.w3, p + l.b3, h2, l.out, l.hidden, y.data());
}

double mlp_loss_grad(const TinyMlp& net, std::span<const MlpSample> batch,
                     std::vector<double>* grad) {
    if (batch.empty()) throw std::invalid_argument("mlp_loss_grad: empty batch");
    const Layout l = layout_of(net);
    if (grad) grad->assign(l.total, 0.0);
    const float* p = net.params.data();
    const double inv_bo = 1.0 / (static_cast<double>(batch.size()) * l.out);

    std::vector<double> z1(l.hidden), h1(l.hidden), z2(l.hidden), h2(l.hidden);
    std::vector<double> y(l.out), dy(l.out), dz2(l.hidden), dz1(l.hidden);

    double loss = 0.0;
    for (const MlpSample& s : batch) {
        if (s.features.size() != static_cast<std::size_t>(l.in) ||
            s.target.size() != static_cast<std::size_t>(l.out)) {
            throw std::invalid_argument("mlp_loss_grad: sample dimension mismatch");
        }
        if (l.hidden == 0) {
            affine(p + l.w1, p + l.b1, s.features, l.out, l.in, y.data());
        } else {
            affine(p + l.w1, p + l.b1, s.features, l.hidden, l.in, z1.data());
            for (int i = 0; i < l.hidden; ++i) h1[i] = z1[i] > 0.0 ? z1[i] : 0.0;
            affine(p + l.w2, p + l.b2, h1, l.hidden, l.hidden, z2.data());
            for (int i = 0; i < l.hidden; ++i) h2[i] = z2[i] > 0.0 ? z2[i] : 0.0;
            affine(p + l.w3, p + l.b3, h2, l.out, l.hidden, y.data());
        }
        for (int k = 0; k < l.out; ++k) {
            const double r = y[k] - s.target[k];
            loss += r * r * inv_bo;
            dy[k] = 2.0 * r * inv_bo;
        }
        if (!grad) continue;
        double* g = grad->data();
        if (l.hidden == 0) {
            for (int r = 0; r < l.out; ++r) {
                double* gw = g + l.w1 + static_cast<std::size_t>(r) * l.in;
                for (int c = 0; c < l.in; ++c) gw[c] += dy[r] * s.features[c];
                g[l.b1 + r] += dy[r];
            }
            continue;
        }
        // third layer
        for (int r = 0; r < l.out; ++r) {
            double* gw = g + l.w3 + static_cast<std::size_t>(r) * l.hidden;
            for (int c = 0; c < l.hidden; ++c) gw[c] += dy[r] * h2[c];
            g[l.b3 + r] += dy[r];
        }
        for (int c = 0; c < l.hidden; ++c) {
            double acc = 0.0;
            for (int r = 0; r < l.out; ++r) {
                acc += static_cast<double>(p[l.w3 + static_cast<std::size_t>(r) * l.hidden + c]) * dy[r];
            }
            dz2[c] = z2[c] > 0.0 ? acc : 0.0;
        }
        // second layer
        for (int r = 0; r < l.hidden; ++r) {
            double* gw = g + l.w2 + static_cast<std::size_t>(r) * l.hidden;
            for (int c = 0; c < l.hidden; ++c) gw[c] += dz2[r] * h1[c];
            g[l.b2 + r] += dz2[r];
        }
        for (int c = 0; c < l.hidden; ++c) {
            double acc = 0.0;
            for (int r = 0; r < l.hidden; ++r) {
                acc += static_cast<double>(p[l.w2 + static_cast<std::size_t>(r) * l.hidden + c]) * dz2[r];
            }
            dz1[c] = z1[c] > 0.0 ? acc : 0.0;
        }
        // first layer
        for (int r = 0; r < l.hidden; ++r) {
            double* gw = g + l.w1 + static_cast<std::size_t>(r) * l.in;
            for (int c = 0; c < l.in; ++c) gw[c] += dz1[r] * s.features[c];
            g[l.b1 + r] += dz1[r];
        }
    }
    return loss;
}

MlpSample draw_bridge_sample(const std::vector<ImagePair>& pairs,
                             const Schedule& train_schedule, int patch,
                             RandomStream& rng) {
    if (pairs.empty()) throw std::invalid_argument("draw_bridge_sample: no pairs");
    const ImagePair& pair = pairs[rng.raw() % pairs.size()];
    const ImageTensor& clean = pair.first;
    const ImageTensor& corrupt = pair.second;
    if (!clean.same_shape(corrupt) || clean.channels != 1) {
        throw std::invalid_argument("draw_bridge_sample: pairs must be same-shape single-channel");
    }
    if (clean.height < static_cast<std::uint32_t>(patch) ||
        clean.width < static_cast<std::uint32_t>(patch)) {
        throw std::invalid_argument("draw_bridge_sample: image smaller than patch");
    }
    const std::uint32_t y0 =
        static_cast<std::uint32_t>(rng.raw() % (clean.height - patch + 1));
    const std::uint32_t x0 =
        static_cast<std::uint32_t>(rng.raw() % (clean.width - patch + 1));
    const int N = train_schedule.steps();
    const int n = 1 + static_cast<int>(rng.raw() % static_cast<std::uint64_t>(N - 1));
    const double s2 = train_schedule.sigma2[n];
    const double b2 = train_schedule.sbar2[n];
    const double w0 = b2 / (s2 + b2);
    const double wN = s2 / (s2 + b2);
    const double sd = std::sqrt(s2 * b2 / (s2 + b2));
    const double sigma_t = std::sqrt(s2);

    const int pp = patch * patch;
    MlpSample sample;
    sample.features.resize(2 * pp + 2);
    sample.target.resize(pp);
    for (int dy = 0; dy < patch; ++dy) {
        for (int dx = 0; dx < patch; ++dx) {
            const int k = dy * patch + dx;
            const double c0 = clean.at(y0 + dy, x0 + dx);
            const double cN = corrupt.at(y0 + dy, x0 + dx);
            const double xt = w0 * c0 + wN * cN + sd * rng.normal();
            sample.features[k] = xt;
            sample.features[pp + k] = cN;
            sample.target[k] = (xt - c0) / sigma_t;
        }
    }
    sample.features[2 * pp] = sigma_t;
    sample.features[2 * pp + 1] = std::sqrt(b2);
    return sample;
}

void AdamState::step(std::span<float> params, std::span<const double> grad) {
    if (params.size() != grad.size()) {
        throw std::invalid_argument("AdamState::step: size mismatch");
    }
    if (m.size() != params.size()) {
        m.assign(params.size(), 0.0);
        v.assign(params.size(), 0.0);
        step_count = 0;
    }
    ++step_count;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step_count));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step_count));
    for (std::size_t i = 0; i < params.size(); ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
        const double mhat = m[i] / c1;
        const double vhat = v[i] / c2;
        params[i] = static_cast<float>(static_cast<double>(params[i]) -
                                       lr * mhat / (std::sqrt(vhat) + eps));
    }
}

TinyMlp train_tiny_mlp(const std::vector<ImagePair>& pairs,
                       const Schedule& train_schedule, const TrainHyper& hyper,
                       TrainLog* log) {
    if (pairs.empty()) throw std::invalid_argument("train_tiny_mlp: empty dataset");
    if (hyper.iters < 1 || hyper.batch < 1) {
        throw std::invalid_argument("train_tiny_mlp: iters and batch must be positive");
    }
    TinyMlp net = TinyMlp::create(hyper.patch, hyper.hidden_width,
                                  derive_seed(hyper.seed, 0));
    RandomStream data_rng(derive_seed(hyper.seed, 1));
    AdamState adam;
    adam.lr = hyper.lr;

    std::vector<MlpSample> batch(hyper.batch);
    std::vector<double> grad;
    double window_sum = 0.0;
    int window_count = 0;
    for (int it = 1; it <= hyper.iters; ++it) {
        for (MlpSample& s : batch) {
            s = draw_bridge_sample(pairs, train_schedule, hyper.patch, data_rng);
        }
        const double loss = mlp_loss_grad(net, batch, &grad);
        if (!std::isfinite(loss)) {
            throw std::runtime_error("train_tiny_mlp: loss diverged at iteration " +
                                     std::to_string(it));
        }
        adam.step(net.params, grad);
        window_sum += loss;
        ++window_count;
        if (log && (it % hyper.log_every == 0 || it == hyper.iters)) {
            log->entries.emplace_back(it, window_sum / window_count);
            window_sum = 0.0;
            window_count = 0;
        }
    }
    return net;
}

namespace {

void mlp_eval_image(const TinyMlp& net, const double* x_t, const double* x_corrupt,
                    std::uint32_t h, std::uint32_t w, double sigma_t,
                    double sigma_bar_t, double* out) {
    const int patch = net.patch;
    const int half = patch / 2;
    const int pp = patch * patch;
    std::vector<double> features(2 * pp + 2);
    std::vector<double> y(pp);
    features[2 * pp] = sigma_t;
    features[2 * pp + 1] = sigma_bar_t;
    const int center = (pp - 1) / 2;
    for (std::uint32_t py = 0; py < h; ++py) {
        for (std::uint32_t px = 0; px < w; ++px) {
            int k = 0;
            for (int dy = -half; dy <= half; ++dy) {
                const std::uint32_t sy = static_cast<std::uint32_t>(
                    std::clamp<int>(static_cast<int>(py) + dy, 0, static_cast<int>(h) - 1));
                for (int dx = -half; dx <= half; ++dx, ++k) {
                    const std::uint32_t sx = static_cast<std::uint32_t>(
                        std::clamp<int>(static_cast<int>(px) + dx, 0,
                                        static_cast<int>(w) - 1));
                    const std::size_t idx = static_cast<std::size_t>(sy) * w + sx;
                    features[k] = x_t[idx];
                    features[pp + k] = x_corrupt[idx];
                }
            }
            net.forward(features, y);
            out[static_cast<std::size_t>(py) * w + px] = y[center];
        }
    }
}

}  // namespace

void MlpPredictor::eval(const PredictView& v, std::span<double> out) const {
    require_positive_sigma(v.sigma_t, "MlpPredictor");
    if (v.channels != 1) {
        throw std::invalid_argument("MlpPredictor: single-channel images only");
    }
    mlp_eval_image(net_, v.x_t, v.x_corrupt, v.height, v.width, v.sigma_t,
                   v.sigma_bar_t, out.data());
}

ImageTensor mlp_predict(const TinyMlp& net, const ImageTensor& x_t, int n,
                        double t, const Condition& y, const Schedule& s) {
    MlpPredictor p(net, s.beta);
    return p.predict(x_t, n, t, y);
}

void save_mlp(const TinyMlp& net, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const Layout l = layout_of(net);
    struct Entry {
        const char* name;
        std::size_t off;
        int rows, cols;
    };
    std::vector<Entry> entries;
    if (l.hidden == 0) {
        entries = {{"w1", l.w1, l.out, l.in}, {"b1", l.b1, 1, l.out}};
    } else {
        entries = {{"w1", l.w1, l.hidden, l.in}, {"b1", l.b1, 1, l.hidden},
                   {"w2", l.w2, l.hidden, l.hidden}, {"b2", l.b2, 1, l.hidden},
                   {"w3", l.w3, l.out, l.hidden}, {"b3", l.b3, 1, l.out}};
    }
    std::ofstream manifest(fs::path(dir) / "model.txt");
    if (!manifest) throw std::runtime_error("save_mlp: cannot write manifest");
    manifest << "tinymlp_v1\n"
             << "patch " << net.patch << "\n"
             << "hidden_width " << net.hidden_width << "\n";
    for (const Entry& e : entries) {
        ImageTensor t(static_cast<std::uint32_t>(e.rows),
                      static_cast<std::uint32_t>(e.cols), 1, -1e6f, 1e6f);
        std::copy(net.params.begin() + static_cast<std::ptrdiff_t>(e.off),
                  net.params.begin() + static_cast<std::ptrdiff_t>(e.off) +
                      static_cast<std::ptrdiff_t>(e.rows) * e.cols,
                  t.data.begin());
        const std::string file = std::string(e.name) + ".tnsr";
        write_tensor(t, (fs::path(dir) / file).string());
        manifest << "layer " << e.name << " " << file << "\n";
    }
    if (!manifest) throw std::runtime_error("save_mlp: manifest write failed");
}

TinyMlp load_mlp(const std::string& dir) {
    namespace fs = std::filesystem;
    std::ifstream manifest(fs::path(dir) / "model.txt");
    if (!manifest) throw std::runtime_error("load_mlp: missing manifest in " + dir);
    std::string tag;
    manifest >> tag;
    if (tag != "tinymlp_v1") throw std::runtime_error("load_mlp: unknown model format");
    TinyMlp net;
    std::string key;
    manifest >> key >> net.patch;
    if (key != "patch") throw std::runtime_error("load_mlp: malformed manifest");
    manifest >> key >> net.hidden_width;
    if (key != "hidden_width") throw std::runtime_error("load_mlp: malformed manifest");
    const Layout l = layout_of(net);
    net.params.assign(l.total, 0.0f);
    std::string name, file;
    std::size_t written = 0;
    while (manifest >> key >> name >> file) {
        if (key != "layer") throw std::runtime_error("load_mlp: malformed manifest");
        const ImageTensor t = read_tensor((fs::path(dir) / file).string());
        std::size_t off = 0, count = t.data.size();
        if (name == "w1") off = l.w1;
        else if (name == "b1") off = l.b1;
        else if (name == "w2") off = l.w2;
        else if (name == "b2") off = l.b2;
        else if (name == "w3") off = l.w3;
        else if (name == "b3") off = l.b3;
        else throw std::runtime_error("load_mlp: unknown layer " + name);
        if (off + count > net.params.size()) {
            throw std::runtime_error("load_mlp: layer " + name + " overruns parameters");
        }
        std::copy(t.data.begin(), t.data.end(), net.params.begin() + static_cast<std::ptrdiff_t>(off));
        written += count;
    }
    if (written != l.total) {
        throw std::runtime_error("load_mlp: parameter count mismatch");
    }
    return net;
}

}  // namespace i3sb
