#include "eshift/networks.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace eshift {

NormPattern uniform_pattern(std::size_t slots, NormChoice choice) {
    return NormPattern(slots, choice);
}

NormPattern gnbn_pattern(std::size_t slots, std::size_t groups) {
    NormPattern p(slots);
    for (std::size_t i = 0; i < slots; ++i) {
        const std::size_t slot = i + 1;
        p[i] = slot % 2 == 1 ? NormChoice{NormKind::GroupNorm, groups}
                             : NormChoice{NormKind::BatchNorm, 1};
    }
    return p;
}

std::vector<BlockVariant> assign_substitution(std::size_t block_count, SubstitutionPattern pattern,
                                              const BlockVariant& substituted) {
    if (block_count < 1) throw std::invalid_argument("block count must be at least 1");
    std::size_t period = 1;
    switch (pattern) {
        case SubstitutionPattern::All: period = 1; break;
        case SubstitutionPattern::D2: period = 2; break;
        case SubstitutionPattern::D4: period = 4; break;
        case SubstitutionPattern::D8: period = 8; break;
    }
    std::vector<BlockVariant> assignment(block_count);
    for (std::size_t b = 1; b <= block_count; ++b) {
        if (b % period == 0) assignment[b - 1] = substituted;
    }
    return assignment;
}

namespace {

void add_inplace(Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("elementwise add shape mismatch");
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
}

// Per-feature reductions of dy and dy*xhat, pooled over samples and spatial
// positions; shared by the affine backward of BN and BFN layers.
void affine_grads(const Tensor& dy, const Tensor& xhat, Tensor& dgamma, Tensor& dbeta) {
    const std::size_t d = dgamma.size();
    const std::size_t m = dy.dim(0);
    const std::size_t spatial = dy.rank() == 4 ? dy.dim(2) * dy.dim(3) : 1;
    for (std::size_t n = 0; n < m; ++n) {
        for (std::size_t c = 0; c < d; ++c) {
            const std::size_t base = (n * d + c) * spatial;
            double sg = 0, sb = 0;
            for (std::size_t i = 0; i < spatial; ++i) {
                sg += dy[base + i] * xhat[base + i];
                sb += dy[base + i];
            }
            dgamma[c] += sg;
            dbeta[c] += sb;
        }
    }
}

Tensor scale_by_gamma(const Tensor& dy, const Tensor& gamma) {
    const std::size_t d = gamma.size();
    const std::size_t m = dy.dim(0);
    const std::size_t spatial = dy.rank() == 4 ? dy.dim(2) * dy.dim(3) : 1;
    Tensor out(dy.shape());
    for (std::size_t n = 0; n < m; ++n) {
        for (std::size_t c = 0; c < d; ++c) {
            const std::size_t base = (n * d + c) * spatial;
            for (std::size_t i = 0; i < spatial; ++i) out[base + i] = dy[base + i] * gamma[c];
        }
    }
    return out;
}

void apply_affine_forward(Tensor& y, const AffineParams& affine) {
    const std::size_t d = affine.gamma.size();
    const std::size_t m = y.dim(0);
    const std::size_t spatial = y.rank() == 4 ? y.dim(2) * y.dim(3) : 1;
    for (std::size_t n = 0; n < m; ++n) {
        for (std::size_t c = 0; c < d; ++c) {
            const std::size_t base = (n * d + c) * spatial;
            for (std::size_t i = 0; i < spatial; ++i) {
                y[base + i] = affine.gamma[c] * y[base + i] + affine.beta[c];
            }
        }
    }
}

class LinearLayer final : public Layer {
public:
    LinearLayer(std::size_t in, std::size_t out, RngState& rng)
        : params_(make_linear(in, out, rng)),
          dweight_(params_.weight.shape()),
          dbias_(params_.bias.shape()) {}

    Tensor forward(const Tensor& x, const ForwardOptions& opt) override {
        return linear_forward(params_, x, opt.build_cache ? &cache_ : nullptr);
    }

    Tensor backward(const Tensor& dy) override {
        LinearGrads g = linear_backward(params_, cache_, dy);
        dweight_ = std::move(g.dweight);
        dbias_ = std::move(g.dbias);
        return std::move(g.dx);
    }

    void collect_params(std::vector<ParamSlot>& out) override {
        out.push_back({&params_.weight, &dweight_});
        out.push_back({&params_.bias, &dbias_});
    }

    void collect_state(std::vector<Tensor*>& out) override {
        out.push_back(&params_.weight);
        out.push_back(&params_.bias);
    }

    std::string kind() const override { return "linear"; }

private:
    LinearParams params_;
    Tensor dweight_, dbias_;
    LinearCache cache_;
};

class Conv2dLayer final : public Layer {
public:
    Conv2dLayer(std::size_t in_ch, std::size_t out_ch, std::size_t kernel, std::size_t stride,
                std::size_t padding, RngState& rng)
        : params_(make_conv2d(in_ch, out_ch, kernel, stride, padding, rng)),
          dkernels_(params_.kernels.shape()),
          dbias_(params_.bias.shape()) {}

    Tensor forward(const Tensor& x, const ForwardOptions& opt) override {
        return conv2d_forward(params_, x, opt.build_cache ? &cache_ : nullptr);
    }

    Tensor backward(const Tensor& dy) override {
        Conv2dGrads g = conv2d_backward(params_, cache_, dy);
        dkernels_ = std::move(g.dkernels);
        dbias_ = std::move(g.dbias);
        return std::move(g.dx);
    }

    void collect_params(std::vector<ParamSlot>& out) override {
        out.push_back({&params_.kernels, &dkernels_});
        out.push_back({&params_.bias, &dbias_});
    }

    void collect_state(std::vector<Tensor*>& out) override {
        out.push_back(&params_.kernels);
        out.push_back(&params_.bias);
    }

    std::string kind() const override { return "conv2d"; }

private:
    Conv2dParams params_;
    Tensor dkernels_, dbias_;
    Conv2dCache cache_;
};

class ReluLayer final : public Layer {
public:
    Tensor forward(const Tensor& x, const ForwardOptions& opt) override {
        return relu_forward(x, opt.build_cache ? &cache_ : nullptr);
    }
    Tensor backward(const Tensor& dy) override { return relu_backward(cache_, dy); }
    std::string kind() const override { return "relu"; }

private:
    ReluCache cache_;
};

// Batch-free normalizer: the same standardization at train and test time.
class NormLayer final : public Layer {
public:
    NormLayer(NormKind norm_kind, PartitionScheme scheme, std::size_t features, double eps,
              bool affine)
        : norm_kind_(norm_kind), scheme_(scheme), eps_(eps) {
        if (affine) {
            affine_ = AffineParams{Tensor::full({features}, 1.0), Tensor({features})};
            dgamma_ = Tensor({features});
            dbeta_ = Tensor({features});
        }
    }

    Tensor forward(const Tensor& x, const ForwardOptions& opt) override {
        Tensor y = standardize_forward(x, scheme_, eps_, opt.build_cache ? &cache_ : nullptr);
        if (affine_) apply_affine_forward(y, *affine_);
        return y;
    }

    Tensor backward(const Tensor& dy) override {
        if (affine_) {
            std::fill(dgamma_.data(), dgamma_.data() + dgamma_.size(), 0.0);
            std::fill(dbeta_.data(), dbeta_.data() + dbeta_.size(), 0.0);
            affine_grads(dy, cache_.normalized, dgamma_, dbeta_);
            return standardize_backward(cache_, scale_by_gamma(dy, affine_->gamma));
        }
        return standardize_backward(cache_, dy);
    }

    void collect_params(std::vector<ParamSlot>& out) override {
        if (affine_) {
            out.push_back({&affine_->gamma, &dgamma_});
            out.push_back({&affine_->beta, &dbeta_});
        }
    }

    void collect_state(std::vector<Tensor*>& out) override {
        if (affine_) {
            out.push_back(&affine_->gamma);
            out.push_back(&affine_->beta);
        }
    }

    std::string kind() const override { return "norm"; }
    NormKind norm_kind() const { return norm_kind_; }

private:
    NormKind norm_kind_;
    PartitionScheme scheme_;
    double eps_;
    std::optional<AffineParams> affine_;
    Tensor dgamma_, dbeta_;
    StandardizeCache cache_;
};

class GlobalAvgPoolLayer final : public Layer {
public:
    Tensor forward(const Tensor& x, const ForwardOptions&) override {
        if (x.rank() != 4) throw std::invalid_argument("global average pool expects rank-4 input");
        const std::size_t m = x.dim(0), c = x.dim(1);
        spatial_h_ = x.dim(2);
        spatial_w_ = x.dim(3);
        const std::size_t s = spatial_h_ * spatial_w_;
        Tensor y({m, c});
        for (std::size_t n = 0; n < m; ++n) {
            for (std::size_t ch = 0; ch < c; ++ch) {
                const double* row = x.data() + (n * c + ch) * s;
                double sum = 0;
                for (std::size_t i = 0; i < s; ++i) sum += row[i];
                y[n * c + ch] = sum / static_cast<double>(s);
            }
        }
        return y;
    }

    Tensor backward(const Tensor& dy) override {
        const std::size_t m = dy.dim(0), c = dy.dim(1);
        const std::size_t s = spatial_h_ * spatial_w_;
        const double inv = 1.0 / static_cast<double>(s);
        Tensor dx({m, c, spatial_h_, spatial_w_});
        for (std::size_t n = 0; n < m; ++n) {
            for (std::size_t ch = 0; ch < c; ++ch) {
                const double g = dy[n * c + ch] * inv;
                double* row = dx.data() + (n * c + ch) * s;
                for (std::size_t i = 0; i < s; ++i) row[i] = g;
            }
        }
        return dx;
    }

    std::string kind() const override { return "global_avg_pool"; }

private:
    std::size_t spatial_h_ = 1, spatial_w_ = 1;
};

std::unique_ptr<Layer> make_norm_layer(const NormChoice& choice, std::size_t features, double alpha,
                                       double eps, bool affine, int& bn_counter, int slot_index) {
    switch (choice.kind) {
        case NormKind::None:
            return nullptr;
        case NormKind::BatchNorm: {
            ++bn_counter;
            const int index = slot_index >= 0 ? slot_index : bn_counter;
            return std::make_unique<BatchNormLayer>(features, alpha, eps, affine, index);
        }
        case NormKind::GroupNorm:
            if (choice.groups < 1 || features % choice.groups != 0) {
                throw std::invalid_argument("group count must divide the feature/channel count");
            }
            return std::make_unique<NormLayer>(NormKind::GroupNorm,
                                               PartitionScheme::per_sample_group(choice.groups),
                                               features, eps, affine);
        case NormKind::LayerNorm:
            return std::make_unique<NormLayer>(NormKind::LayerNorm,
                                               PartitionScheme::per_sample_all_features(), features,
                                               eps, affine);
        case NormKind::InstanceNorm:
            return std::make_unique<NormLayer>(NormKind::InstanceNorm,
                                               PartitionScheme::per_sample_per_channel_spatial(),
                                               features, eps, affine);
    }
    return nullptr;
}

class BottleneckBlock final : public Layer {
public:
    BottleneckBlock(const BlockVariant& variant, std::size_t in_ch, std::size_t mid_ch,
                    std::size_t stride, double alpha, double eps, bool affine, RngState& rng,
                    int& bn_counter) {
        const std::size_t out_ch = 2 * mid_ch;
        auto norm_slot = [&](int slot, std::size_t features) -> std::unique_ptr<Layer> {
            const bool replaced = (variant.kind == BlockKind::P1 && slot == 1) ||
                                  (variant.kind == BlockKind::P2 && slot == 2) ||
                                  (variant.kind == BlockKind::P3 && slot == 3);
            const NormChoice choice = replaced ? variant.bfn : NormChoice{NormKind::BatchNorm, 1};
            return make_norm_layer(choice, features, alpha, eps, affine, bn_counter, -1);
        };

        auto push = [&](std::unique_ptr<Layer> l) {
            if (l) main_.push_back(std::move(l));
        };
        push(std::make_unique<Conv2dLayer>(in_ch, mid_ch, 1, 1, 0, rng));
        push(norm_slot(1, mid_ch));
        push(std::make_unique<ReluLayer>());
        push(std::make_unique<Conv2dLayer>(mid_ch, mid_ch, 3, stride, 1, rng));
        push(norm_slot(2, mid_ch));
        push(std::make_unique<ReluLayer>());
        push(std::make_unique<Conv2dLayer>(mid_ch, out_ch, 1, 1, 0, rng));
        push(norm_slot(3, out_ch));

        if (stride != 1 || in_ch != out_ch) {
            proj_conv_ = std::make_unique<Conv2dLayer>(in_ch, out_ch, 1, stride, 0, rng);
            ++bn_counter;
            proj_bn_ = std::make_unique<BatchNormLayer>(out_ch, alpha, eps, affine, bn_counter);
        }
    }

    Tensor forward(const Tensor& x, const ForwardOptions& opt) override {
        Tensor u = x;
        for (auto& l : main_) u = l->forward(u, opt);
        if (proj_conv_) {
            Tensor v = proj_bn_->forward(proj_conv_->forward(x, opt), opt);
            add_inplace(u, v);
        } else {
            add_inplace(u, x);
        }
        return relu_forward(u, opt.build_cache ? &join_relu_ : nullptr);
    }

    Tensor backward(const Tensor& dy) override {
        Tensor ds = relu_backward(join_relu_, dy);
        Tensor du = ds;
        for (auto it = main_.rbegin(); it != main_.rend(); ++it) du = (*it)->backward(du);
        if (proj_conv_) {
            Tensor dv = proj_conv_->backward(proj_bn_->backward(ds));
            add_inplace(du, dv);
        } else {
            add_inplace(du, ds);
        }
        return du;
    }

    void collect_params(std::vector<ParamSlot>& out) override {
        for (auto& l : main_) l->collect_params(out);
        if (proj_conv_) {
            proj_conv_->collect_params(out);
            proj_bn_->collect_params(out);
        }
    }

    void collect_state(std::vector<Tensor*>& out) override {
        for (auto& l : main_) l->collect_state(out);
        if (proj_conv_) {
            proj_conv_->collect_state(out);
            proj_bn_->collect_state(out);
        }
    }

    void visit(const std::function<void(Layer&)>& fn) override {
        fn(*this);
        for (auto& l : main_) l->visit(fn);
        if (proj_conv_) {
            proj_conv_->visit(fn);
            proj_bn_->visit(fn);
        }
    }

    std::string kind() const override { return "bottleneck"; }

    BatchNormLayer* first_main_bn() {
        for (auto& l : main_) {
            if (auto* bn = l->as_batch_norm()) return bn;
        }
        return nullptr;
    }

private:
    std::vector<std::unique_ptr<Layer>> main_;  // null entries skipped at build
    std::unique_ptr<Layer> proj_conv_;
    std::unique_ptr<BatchNormLayer> proj_bn_;
    ReluCache join_relu_;
};

}  // namespace

BatchNormLayer::BatchNormLayer(std::size_t features, double alpha, double eps, bool affine,
                               int layer_index)
    : state_(make_batch_norm(features, alpha, eps, affine)), layer_index_(layer_index) {
    if (affine) {
        dgamma_ = Tensor({features});
        dbeta_ = Tensor({features});
    }
}

Tensor BatchNormLayer::forward(const Tensor& x, const ForwardOptions& opt) {
    if (opt.captures) opt.captures->push_back({layer_index_, x});
    if (opt.mode == Mode::Train) {
        state_.mode = BatchNormState::Mode::Train;
        BnTrainResult r = bn_forward_train(state_, x, opt.build_cache ? &cache_ : nullptr);
        pending_ = std::move(r.stats);
        has_pending_ = true;
        return std::move(r.y);
    }
    state_.mode = BatchNormState::Mode::Infer;
    return bn_forward_infer(state_, x);
}

Tensor BatchNormLayer::backward(const Tensor& dy) {
    if (state_.affine) {
        std::fill(dgamma_.data(), dgamma_.data() + dgamma_.size(), 0.0);
        std::fill(dbeta_.data(), dbeta_.data() + dbeta_.size(), 0.0);
        affine_grads(dy, cache_.normalized, dgamma_, dbeta_);
        return standardize_backward(cache_, scale_by_gamma(dy, state_.affine->gamma));
    }
    return standardize_backward(cache_, dy);
}

void BatchNormLayer::collect_params(std::vector<ParamSlot>& out) {
    if (state_.affine) {
        out.push_back({&state_.affine->gamma, &dgamma_});
        out.push_back({&state_.affine->beta, &dbeta_});
    }
}

void BatchNormLayer::collect_state(std::vector<Tensor*>& out) {
    out.push_back(&state_.running_mean);
    out.push_back(&state_.running_var);
    if (state_.affine) {
        out.push_back(&state_.affine->gamma);
        out.push_back(&state_.affine->beta);
    }
}

void BatchNormLayer::update_running() {
    if (has_pending_) {
        bn_update_running(state_, pending_);
        has_pending_ = false;
    }
}

Network::ForwardResult Network::forward(const Tensor& x, Mode mode, bool capture) {
    ForwardResult r;
    ForwardOptions opt;
    opt.mode = mode;
    opt.build_cache = false;
    opt.captures = capture ? &r.captures : nullptr;
    Tensor h = x;
    for (auto& l : layers_) h = l->forward(h, opt);
    r.logits = std::move(h);
    return r;
}

Tensor Network::forward_train(const Tensor& x) {
    ForwardOptions opt;
    opt.mode = Mode::Train;
    opt.build_cache = true;
    Tensor h = x;
    for (auto& l : layers_) h = l->forward(h, opt);
    return h;
}

Tensor Network::backward(const Tensor& dlogits) {
    Tensor g = dlogits;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
    return g;
}

void Network::update_running_stats() {
    for (auto* bn : bn_layers()) bn->update_running();
}

std::vector<ParamSlot> Network::params() {
    std::vector<ParamSlot> out;
    for (auto& l : layers_) l->collect_params(out);
    return out;
}

std::vector<Tensor*> Network::state_tensors() {
    std::vector<Tensor*> out;
    for (auto& l : layers_) l->collect_state(out);
    return out;
}

std::vector<BatchNormLayer*> Network::bn_layers() {
    std::vector<BatchNormLayer*> out;
    visit([&](Layer& l) {
        if (auto* bn = l.as_batch_norm()) out.push_back(bn);
    });
    return out;
}

void Network::visit(const std::function<void(Layer&)>& fn) {
    for (auto& l : layers_) l->visit(fn);
}

std::size_t Network::count_kind(const std::string& kind) {
    std::size_t n = 0;
    visit([&](Layer& l) {
        if (l.kind() == kind) ++n;
    });
    return n;
}

BatchNormLayer* Network::first_bn_in_block(std::size_t block_index_1based) {
    if (block_index_1based < 1 || block_index_1based > blocks_.size()) {
        throw std::out_of_range("block index out of range");
    }
    auto* block = static_cast<BottleneckBlock*>(blocks_[block_index_1based - 1]);
    return block->first_main_bn();
}

std::unique_ptr<Layer> build_bottleneck(const BlockVariant& variant, std::size_t in_ch,
                                        std::size_t mid_ch, std::size_t stride, double alpha,
                                        double eps, bool affine, RngState& rng, int& bn_counter) {
    if (in_ch == 0 || mid_ch == 0) throw std::invalid_argument("channel counts must be positive");
    return std::make_unique<BottleneckBlock>(variant, in_ch, mid_ch, stride, alpha, eps, affine,
                                             rng, bn_counter);
}

Network build_mlp(const NetworkSpec& spec) {
    const MlpArch& a = spec.mlp;
    if (a.depth < 2) throw std::invalid_argument("mlp depth must be at least 2");
    const std::size_t slots = a.depth - 1;
    if (spec.pattern.size() != slots) {
        throw std::invalid_argument("norm pattern length must equal hidden layer count");
    }
    RngState rng(spec.init_seed);
    Network net;
    net.spec_ = spec;
    std::size_t prev = a.inputs;
    int bn_counter = 0;
    for (std::size_t slot = 1; slot <= slots; ++slot) {
        net.layers_.push_back(std::make_unique<LinearLayer>(prev, a.width, rng));
        prev = a.width;
        auto norm = make_norm_layer(spec.pattern[slot - 1], a.width, spec.alpha, spec.eps,
                                    spec.affine, bn_counter, static_cast<int>(slot));
        if (norm) net.layers_.push_back(std::move(norm));
        net.layers_.push_back(std::make_unique<ReluLayer>());
    }
    net.layers_.push_back(std::make_unique<LinearLayer>(prev, a.classes, rng));
    return net;
}

Network build_cnn(const NetworkSpec& spec) {
    const CnnArch& a = spec.cnn;
    if (a.depth < 2) throw std::invalid_argument("cnn depth must be at least 2");
    const std::size_t n_conv = a.depth - 1;
    if (spec.pattern.size() != n_conv) {
        throw std::invalid_argument("norm pattern length must equal conv block count");
    }
    // Two stride-2 stages at one third and two thirds of the stack; channel
    // width doubles at each downsampling.
    const std::size_t down1 = n_conv / 3 + 1;
    const std::size_t down2 = 2 * n_conv / 3 + 1;

    RngState rng(spec.init_seed);
    Network net;
    net.spec_ = spec;
    std::size_t prev_ch = a.in_channels;
    std::size_t h = a.image_h, w = a.image_w;
    int bn_counter = 0;
    for (std::size_t b = 1; b <= n_conv; ++b) {
        std::size_t ch = a.base_channels;
        if (b >= down1) ch = 2 * a.base_channels;
        if (b >= down2) ch = 4 * a.base_channels;
        const std::size_t stride = (n_conv > 1 && (b == down1 || b == down2)) ? 2 : 1;
        h = conv2d_out_extent(h, 3, stride, 1);
        w = conv2d_out_extent(w, 3, stride, 1);
        net.layers_.push_back(std::make_unique<Conv2dLayer>(prev_ch, ch, 3, stride, 1, rng));
        prev_ch = ch;
        auto norm = make_norm_layer(spec.pattern[b - 1], ch, spec.alpha, spec.eps, spec.affine,
                                    bn_counter, static_cast<int>(b));
        if (norm) net.layers_.push_back(std::move(norm));
        net.layers_.push_back(std::make_unique<ReluLayer>());
    }
    net.layers_.push_back(std::make_unique<GlobalAvgPoolLayer>());
    net.layers_.push_back(std::make_unique<LinearLayer>(prev_ch, a.classes, rng));
    return net;
}

Network build_network(const NetworkSpec& spec) {
    if (spec.arch == NetworkSpec::Arch::Mlp) return build_mlp(spec);
    if (spec.arch == NetworkSpec::Arch::Cnn) return build_cnn(spec);

    const ResidualArch& a = spec.residual;
    if (a.blocks < 1) throw std::invalid_argument("residual network needs at least one block");
    if (a.variants.size() != a.blocks) {
        throw std::invalid_argument("variant assignment length must equal block count");
    }
    RngState rng(spec.init_seed);
    Network net;
    net.spec_ = spec;
    const std::size_t width = 2 * a.channels;
    int bn_counter = 0;

    // Stem: stride-2 conv so the block stack runs at quarter resolution.
    net.layers_.push_back(std::make_unique<Conv2dLayer>(1, width, 3, 2, 1, rng));
    ++bn_counter;
    net.layers_.push_back(
        std::make_unique<BatchNormLayer>(width, spec.alpha, spec.eps, spec.affine, bn_counter));
    net.layers_.push_back(std::make_unique<ReluLayer>());

    const std::size_t down_block = a.blocks >= 2 ? a.blocks / 2 + 1 : 0;
    for (std::size_t b = 1; b <= a.blocks; ++b) {
        const std::size_t stride = b == down_block ? 2 : 1;
        auto block = build_bottleneck(a.variants[b - 1], width, a.channels, stride, spec.alpha,
                                      spec.eps, spec.affine, rng, bn_counter);
        net.blocks_.push_back(block.get());
        net.layers_.push_back(std::move(block));
    }
    net.layers_.push_back(std::make_unique<GlobalAvgPoolLayer>());
    net.layers_.push_back(std::make_unique<LinearLayer>(width, a.classes, rng));
    return net;
}

void Optimizer::step(const std::vector<ParamSlot>& params) {
    if (kind == Kind::Sgd && velocity_.empty()) {
        velocity_.reserve(params.size());
        for (const auto& p : params) velocity_.emplace_back(p.value->shape());
    }
    if (kind == Kind::Sgd && velocity_.size() != params.size()) {
        throw std::logic_error("optimizer applied to a different parameter set");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor& value = *params[i].value;
        const Tensor& grad = *params[i].grad;
        if (kind == Kind::FullBatchGd) {
            for (std::size_t j = 0; j < value.size(); ++j) value[j] -= lr * grad[j];
        } else {
            Tensor& v = velocity_[i];
            for (std::size_t j = 0; j < value.size(); ++j) {
                v[j] = momentum * v[j] + grad[j] + weight_decay * value[j];
                value[j] -= lr * v[j];
            }
        }
    }
}

void backward_and_update(Network& net, const Tensor& dlogits, Optimizer& opt) {
    net.backward(dlogits);
    opt.step(net.params());
    net.update_running_stats();
}

}  // namespace eshift
