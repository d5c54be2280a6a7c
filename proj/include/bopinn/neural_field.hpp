#pragma once

// Dense surrogate u(x, t) ~ NN(W, b) with exact second derivatives.
//
// Derivatives come from forward propagation of second-order jets along the
// two input axes: every unit carries (value, d/dx, d/dt, d2/dx2, d2/dt2).
// Parameter gradients of any scalar built from those jets are obtained by
// reverse accumulation through the same jet computation (JetTape).
//
// Flat parameter order: for each layer k = 0..K-1, weights[k] in row-major
// order, then biases[k].

#include <bopinn/csv.hpp>
#include <bopinn/error.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace bopinn {

enum class Activation { tanh, identity };

inline std::string to_string(Activation a) { return a == Activation::tanh ? "tanh" : "identity"; }

inline Activation parse_activation(const std::string& s) {
    if (s == "tanh") return Activation::tanh;
    if (s == "identity") return Activation::identity;
    throw ConfigError("unknown activation '" + s + "'");
}

struct Point {
    double x = 0.0;
    double t = 0.0;
};

struct Jet2 {
    double value = 0.0;
    double d_x = 0.0;
    double d_t = 0.0;
    double d_xx = 0.0;
    double d_tt = 0.0;
};

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline void validate_layer_sizes(const std::vector<int>& sizes) {
    if (sizes.size() < 2) throw ConfigError("architecture needs at least an input and an output layer");
    if (sizes.front() != 2) throw ConfigError("input width must be 2 (x, t)");
    if (sizes.back() != 1) throw ConfigError("output width must be 1");
    for (int s : sizes)
        if (s < 1) throw ConfigError("layer widths must be >= 1");
}

struct MlpParams {
    std::vector<int> layer_sizes;
    std::vector<Eigen::MatrixXd> weights;  // weights[k]: sizes[k+1] x sizes[k]
    std::vector<Eigen::VectorXd> biases;   // biases[k]: sizes[k+1]
    Activation activation = Activation::tanh;
    double dropout_rate = 0.0;

    static MlpParams zeros(std::vector<int> sizes, Activation act = Activation::tanh, double dropout = 0.0) {
        validate_layer_sizes(sizes);
        if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout rate must lie in [0, 1)");
        MlpParams p;
        p.layer_sizes = std::move(sizes);
        p.activation = act;
        p.dropout_rate = dropout;
        for (std::size_t k = 0; k + 1 < p.layer_sizes.size(); ++k) {
            p.weights.emplace_back(Eigen::MatrixXd::Zero(p.layer_sizes[k + 1], p.layer_sizes[k]));
            p.biases.emplace_back(Eigen::VectorXd::Zero(p.layer_sizes[k + 1]));
        }
        return p;
    }

    std::size_t num_layers() const noexcept { return weights.size(); }

    std::size_t parameter_count() const noexcept {
        std::size_t n = 0;
        for (std::size_t k = 0; k < weights.size(); ++k) n += weights[k].size() + biases[k].size();
        return n;
    }

    /// Offset of weights[k] in the flat vector; biases[k] follow immediately.
    std::size_t weight_offset(std::size_t k) const noexcept {
        std::size_t n = 0;
        for (std::size_t j = 0; j < k; ++j) n += weights[j].size() + biases[j].size();
        return n;
    }

    Eigen::VectorXd flatten() const {
        Eigen::VectorXd flat(static_cast<Eigen::Index>(parameter_count()));
        Eigen::Index off = 0;
        for (std::size_t k = 0; k < weights.size(); ++k) {
            const auto& w = weights[k];
            Eigen::Map<RowMajorMatrix>(flat.data() + off, w.rows(), w.cols()) = w;
            off += w.size();
            flat.segment(off, biases[k].size()) = biases[k];
            off += biases[k].size();
        }
        return flat;
    }

    void assign(const Eigen::VectorXd& flat) {
        if (static_cast<std::size_t>(flat.size()) != parameter_count())
            throw InvalidInput("flat parameter vector has wrong length");
        Eigen::Index off = 0;
        for (std::size_t k = 0; k < weights.size(); ++k) {
            auto& w = weights[k];
            w = Eigen::Map<const RowMajorMatrix>(flat.data() + off, w.rows(), w.cols());
            off += w.size();
            biases[k] = flat.segment(off, biases[k].size());
            off += biases[k].size();
        }
    }

    MlpParams with(const Eigen::VectorXd& flat) const {
        MlpParams p = *this;
        p.assign(flat);
        return p;
    }
};

/// Glorot-uniform weights, zero biases.
inline MlpParams init_params(std::vector<int> layer_sizes, Activation activation, double dropout_rate,
                             std::uint64_t seed) {
    MlpParams p = MlpParams::zeros(std::move(layer_sizes), activation, dropout_rate);
    std::mt19937_64 rng(seed);
    for (auto& w : p.weights) {
        const double bound = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = dist(rng);
    }
    return p;
}

enum class JetOrder { value, full };

/// Per-hidden-layer multiplicative masks (0 or 1/(1-p)), one column per point.
struct DropoutMasks {
    std::vector<Eigen::ArrayXXd> layers;
};

inline DropoutMasks sample_dropout_masks(const MlpParams& p, std::size_t n_points, std::mt19937_64& rng) {
    DropoutMasks m;
    const double keep = 1.0 - p.dropout_rate;
    std::bernoulli_distribution kept(keep);
    for (std::size_t k = 0; k + 1 < p.num_layers(); ++k) {
        Eigen::ArrayXXd a(p.layer_sizes[k + 1], static_cast<Eigen::Index>(n_points));
        for (Eigen::Index c = 0; c < a.cols(); ++c)
            for (Eigen::Index r = 0; r < a.rows(); ++r) a(r, c) = kept(rng) ? 1.0 / keep : 0.0;
        m.layers.push_back(std::move(a));
    }
    return m;
}

/// Forward jet evaluation of a batch of points, retaining what the reverse
/// sweep needs. Output channels are stacked: entry (k * B + i) is channel k
/// (value, d_x, d_t, d_xx, d_tt) of point i.
///
/// A tape may be re-run on new parameters or points; its buffers are reused.
/// The parameters and masks must outlive every backward() call.
class JetTape {
public:
    JetTape() = default;

    JetTape(const MlpParams& params, std::span<const Point> points, JetOrder order,
            const DropoutMasks* masks = nullptr) {
        run(params, points, order, masks);
    }

    void run(const MlpParams& params, std::span<const Point> points, JetOrder order,
             const DropoutMasks* masks = nullptr) {
        params_ = &params;
        masks_ = masks;
        batch_ = static_cast<Eigen::Index>(points.size());
        channels_ = order == JetOrder::full ? 5 : 1;
        const Eigen::Index B = batch_;
        const Eigen::Index CB = channels_ * B;
        const auto L = params.num_layers();
        if (masks_ && masks_->layers.size() + 1 != L) throw InvalidInput("dropout mask depth mismatch");

        inputs_.resize(L);
        pre_.resize(L);
        s1_.resize(L);
        s2_.resize(L);
        s3_.resize(L);

        auto& a0 = inputs_[0];
        a0.setZero(2, CB);
        for (Eigen::Index i = 0; i < B; ++i) {
            a0(0, i) = points[static_cast<std::size_t>(i)].x;
            a0(1, i) = points[static_cast<std::size_t>(i)].t;
        }
        if (channels_ == 5) {
            a0.block(0, B, 1, B).setOnes();      // dx/dx
            a0.block(1, 2 * B, 1, B).setOnes();  // dt/dt
        }

        for (std::size_t l = 0; l < L; ++l) {
            auto& z = pre_[l];
            z.resize(params.weights[l].rows(), CB);
            z.noalias() = params.weights[l] * inputs_[l];
            z.leftCols(B).colwise() += params.biases[l];
            if (l + 1 == L) break;
            activate(l);
        }
        output_ = pre_[L - 1].row(0);
    }

    Eigen::Index batch() const noexcept { return batch_; }
    Eigen::Index channels() const noexcept { return channels_; }
    const Eigen::RowVectorXd& output() const noexcept { return output_; }

    double value(Eigen::Index i) const { return output_(i); }

    Jet2 jet(Eigen::Index i) const {
        Jet2 j;
        j.value = output_(i);
        if (channels_ == 5) {
            j.d_x = output_(batch_ + i);
            j.d_t = output_(2 * batch_ + i);
            j.d_xx = output_(3 * batch_ + i);
            j.d_tt = output_(4 * batch_ + i);
        }
        return j;
    }

    /// Accumulates d(loss)/d(params) into `grad` given d(loss)/d(output).
    void backward(const Eigen::RowVectorXd& out_adjoint, Eigen::Ref<Eigen::VectorXd> grad) {
        const Eigen::Index B = batch_;
        const auto& params = *params_;
        const auto L = params.num_layers();
        zbar_ = out_adjoint;
        for (std::size_t l = L; l-- > 0;) {
            const auto& w = params.weights[l];
            const auto off = static_cast<Eigen::Index>(params.weight_offset(l));
            Eigen::Map<RowMajorMatrix>(grad.data() + off, w.rows(), w.cols()).noalias() +=
                zbar_ * inputs_[l].transpose();
            grad.segment(off + w.size(), w.rows()) += zbar_.leftCols(B).rowwise().sum();
            if (l == 0) break;
            abar_.resize(w.cols(), zbar_.cols());
            abar_.noalias() = w.transpose() * zbar_;
            activate_adjoint(l - 1);
        }
    }

private:
    // inputs_[l + 1] = act(pre_[l]) propagated through all channels.
    void activate(std::size_t l) {
        const Eigen::Index B = batch_;
        const auto& z = pre_[l];
        const Eigen::Index n = z.rows();
        auto& a = s3_[l];  // scratch for the activation value until s3 is formed
        auto& s1 = s1_[l];
        auto& s2 = s2_[l];
        const auto zv = z.leftCols(B).array();
        if (params_->activation == Activation::tanh) {
            // tanh via the vectorised exp; absolute error stays at round-off level.
            a = 1.0 - 2.0 / ((2.0 * zv).exp() + 1.0);
            s1 = 1.0 - a.square();
            s2 = -2.0 * a * s1;
        } else {
            a = zv;
            s1.setOnes(n, B);
            s2.setZero(n, B);
        }
        auto& out = inputs_[l + 1];
        out.resize(n, channels_ * B);
        out.leftCols(B) = a.matrix();
        if (params_->activation == Activation::tanh)
            s3_[l] = -2.0 * s1.square() - 2.0 * out.leftCols(B).array() * s2;
        else
            s3_[l].setZero(n, B);
        if (channels_ == 5) {
            const auto zx = z.middleCols(B, B).array();
            const auto zt = z.middleCols(2 * B, B).array();
            out.middleCols(B, B) = (s1 * zx).matrix();
            out.middleCols(2 * B, B) = (s1 * zt).matrix();
            out.middleCols(3 * B, B) = (s2 * zx.square() + s1 * z.middleCols(3 * B, B).array()).matrix();
            out.middleCols(4 * B, B) = (s2 * zt.square() + s1 * z.middleCols(4 * B, B).array()).matrix();
        }
        if (masks_) {
            const auto& m = masks_->layers[l];
            for (Eigen::Index c = 0; c < channels_; ++c) out.middleCols(c * B, B).array() *= m;
        }
    }

    // Maps abar_ = d/d(inputs_[l + 1]) to zbar_ = d/d(pre_[l]).
    void activate_adjoint(std::size_t l) {
        const Eigen::Index B = batch_;
        if (masks_) {
            const auto& m = masks_->layers[l];
            for (Eigen::Index c = 0; c < channels_; ++c) abar_.middleCols(c * B, B).array() *= m;
        }
        const auto& s1 = s1_[l];
        const auto& s2 = s2_[l];
        const auto& s3 = s3_[l];
        zbar_.resize(abar_.rows(), abar_.cols());
        const auto av = abar_.leftCols(B).array();
        if (channels_ == 1) {
            zbar_ = (av * s1).matrix();
            return;
        }
        const auto& z = pre_[l];
        const auto zx = z.middleCols(B, B).array();
        const auto zt = z.middleCols(2 * B, B).array();
        const auto zxx = z.middleCols(3 * B, B).array();
        const auto ztt = z.middleCols(4 * B, B).array();
        const auto ax = abar_.middleCols(B, B).array();
        const auto at = abar_.middleCols(2 * B, B).array();
        const auto axx = abar_.middleCols(3 * B, B).array();
        const auto att = abar_.middleCols(4 * B, B).array();
        zbar_.leftCols(B) = (av * s1 + ax * s2 * zx + at * s2 * zt + axx * (s3 * zx.square() + s2 * zxx) +
                             att * (s3 * zt.square() + s2 * ztt))
                                .matrix();
        zbar_.middleCols(B, B) = (ax * s1 + 2.0 * axx * s2 * zx).matrix();
        zbar_.middleCols(2 * B, B) = (at * s1 + 2.0 * att * s2 * zt).matrix();
        zbar_.middleCols(3 * B, B) = (axx * s1).matrix();
        zbar_.middleCols(4 * B, B) = (att * s1).matrix();
    }

    const MlpParams* params_ = nullptr;
    const DropoutMasks* masks_ = nullptr;
    Eigen::Index batch_ = 0;
    Eigen::Index channels_ = 1;
    std::vector<Eigen::MatrixXd> inputs_;  // input of layer l, stacked channels
    std::vector<Eigen::MatrixXd> pre_;     // pre-activation of layer l
    std::vector<Eigen::ArrayXXd> s1_, s2_, s3_;  // activation derivatives at pre_[l]
    Eigen::MatrixXd zbar_, abar_;
    Eigen::RowVectorXd output_;
};

inline void check_finite(double v, const char* term) {
    if (!std::isfinite(v)) throw NumericError(term, "non-finite network evaluation");
}

inline std::vector<double> forward(const MlpParams& params, std::span<const Point> points) {
    const JetTape tape(params, points, JetOrder::value);
    std::vector<double> out(points.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = tape.value(static_cast<Eigen::Index>(i));
        check_finite(out[i], "forward");
    }
    return out;
}

/// Deterministic evaluation (dropout inactive).
inline double forward(const MlpParams& params, double x, double t) {
    const Point p{x, t};
    return forward(params, std::span<const Point>(&p, 1)).front();
}

inline std::vector<Jet2> forward_jet2(const MlpParams& params, std::span<const Point> points) {
    const JetTape tape(params, points, JetOrder::full);
    std::vector<Jet2> out(points.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = tape.jet(static_cast<Eigen::Index>(i));
        for (double v : {out[i].value, out[i].d_x, out[i].d_t, out[i].d_xx, out[i].d_tt})
            check_finite(v, "forward_jet2");
    }
    return out;
}

inline Jet2 forward_jet2(const MlpParams& params, double x, double t) {
    const Point p{x, t};
    return forward_jet2(params, std::span<const Point>(&p, 1)).front();
}

/// A scalar loss assembled from field jets at fixed query points, plus an
/// optional direct function of the flat parameters.
///
/// `head` receives the jets and must fill the adjoint d(loss)/d(jet entry)
/// for every point; it returns its loss contribution.
struct FieldLoss {
    using Head = std::function<double(std::span<const Jet2> jets, std::span<Jet2> adjoint)>;
    using ParamTerm = std::function<double(const Eigen::VectorXd& flat, Eigen::VectorXd& grad)>;

    std::vector<Point> points;
    Head head;
    ParamTerm param_term;
};

struct LossGrad {
    double value = 0.0;
    Eigen::VectorXd gradient;
};

inline LossGrad loss_grad(const MlpParams& params, const FieldLoss& loss) {
    LossGrad out;
    out.gradient = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(params.parameter_count()));

    if (loss.head && !loss.points.empty()) {
        JetTape tape(params, loss.points, JetOrder::full);
        const auto B = tape.batch();
        std::vector<Jet2> jets(loss.points.size());
        for (Eigen::Index i = 0; i < B; ++i) jets[static_cast<std::size_t>(i)] = tape.jet(i);
        std::vector<Jet2> adj(jets.size());
        const double v = loss.head(jets, adj);
        if (!std::isfinite(v)) throw NumericError("field term", "non-finite loss");
        Eigen::RowVectorXd seed(5 * B);
        for (Eigen::Index i = 0; i < B; ++i) {
            const auto& a = adj[static_cast<std::size_t>(i)];
            seed(i) = a.value;
            seed(B + i) = a.d_x;
            seed(2 * B + i) = a.d_t;
            seed(3 * B + i) = a.d_xx;
            seed(4 * B + i) = a.d_tt;
        }
        tape.backward(seed, out.gradient);
        out.value += v;
    }
    if (loss.param_term) {
        const Eigen::VectorXd flat = params.flatten();
        Eigen::VectorXd g = Eigen::VectorXd::Zero(flat.size());
        const double v = loss.param_term(flat, g);
        if (!std::isfinite(v)) throw NumericError("parameter term", "non-finite loss");
        out.value += v;
        out.gradient += g;
    }
    if (!out.gradient.allFinite()) throw NumericError("gradient", "non-finite gradient");
    return out;
}

// Text format:
//   bopinn-mlp 1
//   layer_sizes 2 32 32 1
//   activation tanh
//   dropout_rate 0
//   params <count>
//   <one value per line, 17 significant digits, flat order>
inline void write_params(std::ostream& os, const MlpParams& p) {
    os << "bopinn-mlp 1\nlayer_sizes";
    for (int s : p.layer_sizes) os << ' ' << s;
    os << "\nactivation " << to_string(p.activation) << "\ndropout_rate " << csv::format_double(p.dropout_rate)
       << "\nparams " << p.parameter_count() << '\n';
    const auto flat = p.flatten();
    for (Eigen::Index i = 0; i < flat.size(); ++i) os << csv::format_double(flat(i)) << '\n';
}

inline MlpParams read_params(std::istream& is) {
    std::string tag, line;
    int version = 0;
    if (!(is >> tag >> version) || tag != "bopinn-mlp" || version != 1)
        throw IoError("not a bopinn-mlp v1 stream");
    std::vector<int> sizes;
    is >> tag;
    if (tag != "layer_sizes") throw IoError("expected layer_sizes");
    std::getline(is, line);
    std::istringstream ls(line);
    for (int s; ls >> s;) sizes.push_back(s);
    std::string act;
    double dropout = 0.0;
    std::string drop_s;
    std::size_t count = 0;
    if (!(is >> tag >> act) || tag != "activation") throw IoError("expected activation");
    if (!(is >> tag >> drop_s) || tag != "dropout_rate") throw IoError("expected dropout_rate");
    dropout = csv::parse_double(drop_s);
    if (!(is >> tag >> count) || tag != "params") throw IoError("expected params");
    MlpParams p = MlpParams::zeros(sizes, parse_activation(act), dropout);
    if (count != p.parameter_count()) throw IoError("parameter count does not match layer sizes");
    Eigen::VectorXd flat(static_cast<Eigen::Index>(count));
    for (std::size_t i = 0; i < count; ++i) {
        std::string v;
        if (!(is >> v)) throw IoError("truncated parameter list");
        flat(static_cast<Eigen::Index>(i)) = csv::parse_double(v);
    }
    p.assign(flat);
    return p;
}

inline void save_params(const std::filesystem::path& path, const MlpParams& p) {
    ensure_directory(path.parent_path());
    std::ofstream os(path);
    if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
    write_params(os, p);
}

inline MlpParams load_params(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open '" + path.string() + "'");
    return read_params(is);
}

}  // namespace bopinn
