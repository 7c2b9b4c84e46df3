#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "eshift/layers.hpp"
#include "eshift/normalization.hpp"
#include "eshift/tensor.hpp"

namespace eshift {

enum class Mode { Train, Infer };

enum class NormKind { None, BatchNorm, GroupNorm, LayerNorm, InstanceNorm };

struct NormChoice {
    NormKind kind = NormKind::None;
    std::size_t groups = 1;  // GroupNorm only
};

/// Per-hidden-layer normalizer choices; length equals the hidden layer count.
using NormPattern = std::vector<NormChoice>;

NormPattern uniform_pattern(std::size_t slots, NormChoice choice);
/// Odd slots (1-based) carry the group normalizer, even slots batch norm.
NormPattern gnbn_pattern(std::size_t slots, std::size_t groups);

enum class BlockKind { Baseline, P1, P2, P3 };

/// Bottleneck flavor: which of the three norm slots (if any) is replaced by
/// the batch-free normalizer.
struct BlockVariant {
    BlockKind kind = BlockKind::Baseline;
    NormChoice bfn{NormKind::GroupNorm, 4};
};

enum class SubstitutionPattern { All, D2, D4, D8 };

/// 1-based block indices matching the pattern get the substituted variant,
/// the rest stay baseline. D2 marks every 2nd block, D4 every 4th, D8 every 8th.
std::vector<BlockVariant> assign_substitution(std::size_t block_count, SubstitutionPattern pattern,
                                              const BlockVariant& substituted);

struct MlpArch {
    std::size_t depth = 20;   // number of linear layers including the classifier
    std::size_t width = 128;
    std::size_t inputs = 784;
    std::size_t classes = 10;
};

struct CnnArch {
    std::size_t depth = 14;  // conv blocks + classifier
    std::size_t base_channels = 16;
    std::size_t in_channels = 1;
    std::size_t image_h = 28;
    std::size_t image_w = 28;
    std::size_t classes = 10;
};

struct ResidualArch {
    std::size_t blocks = 4;
    std::size_t channels = 12;  // bottleneck mid width; block output is twice this
    std::size_t classes = 10;
    std::vector<BlockVariant> variants;  // one per block
};

struct NetworkSpec {
    enum class Arch { Mlp, Cnn, Residual } arch = Arch::Mlp;
    MlpArch mlp;
    CnnArch cnn;
    ResidualArch residual;
    NormPattern pattern;  // MLP/CNN only
    bool affine = false;
    double alpha = 0.9;
    double eps = 1e-5;
    std::uint64_t init_seed = 1;
};

struct Capture {
    int layer_index = 0;  // BN layer id in depth order
    Tensor input;         // the BN layer's input, before normalization
};

struct ParamSlot {
    Tensor* value = nullptr;
    Tensor* grad = nullptr;
};

struct ForwardOptions {
    Mode mode = Mode::Infer;
    bool build_cache = false;
    std::vector<Capture>* captures = nullptr;
};

class BatchNormLayer;

class Layer {
public:
    virtual ~Layer() = default;
    virtual Tensor forward(const Tensor& x, const ForwardOptions& opt) = 0;
    virtual Tensor backward(const Tensor& dy) = 0;
    virtual void collect_params(std::vector<ParamSlot>&) {}
    virtual void collect_state(std::vector<Tensor*>&) {}
    virtual void visit(const std::function<void(Layer&)>& fn) { fn(*this); }
    virtual BatchNormLayer* as_batch_norm() { return nullptr; }
    virtual std::string kind() const = 0;
};

class BatchNormLayer final : public Layer {
public:
    BatchNormLayer(std::size_t features, double alpha, double eps, bool affine, int layer_index);

    Tensor forward(const Tensor& x, const ForwardOptions& opt) override;
    Tensor backward(const Tensor& dy) override;
    void collect_params(std::vector<ParamSlot>& out) override;
    void collect_state(std::vector<Tensor*>& out) override;
    BatchNormLayer* as_batch_norm() override { return this; }
    std::string kind() const override { return "batch_norm"; }

    /// Folds the latest train-forward batch statistics into the running average.
    void update_running();

    BatchNormState& state() { return state_; }
    const BatchNormState& state() const { return state_; }
    int layer_index() const { return layer_index_; }

private:
    BatchNormState state_;
    int layer_index_;
    StandardizeCache cache_;
    BatchStats pending_;
    bool has_pending_ = false;
    Tensor dgamma_, dbeta_;
};

class Network {
public:
    struct ForwardResult {
        Tensor logits;
        std::vector<Capture> captures;
    };

    /// Evaluation pass: no backward caches are built. With `capture`, every
    /// BN layer records its input in depth order.
    ForwardResult forward(const Tensor& x, Mode mode, bool capture = false);

    /// Training pass that keeps per-layer caches for the next backward().
    Tensor forward_train(const Tensor& x);

    /// Propagates loss gradients to every parameter; returns the input gradient.
    Tensor backward(const Tensor& dlogits);

    void update_running_stats();

    std::vector<ParamSlot> params();
    std::vector<Tensor*> state_tensors();  // parameters + BN running statistics
    std::vector<BatchNormLayer*> bn_layers();
    void visit(const std::function<void(Layer&)>& fn);
    std::size_t count_kind(const std::string& kind);

    std::size_t block_count() const { return blocks_.size(); }
    /// First batch-norm slot on a bottleneck's main path (nullptr if that
    /// block has none); this is the slot the disturbance protocol perturbs.
    BatchNormLayer* first_bn_in_block(std::size_t block_index_1based);

    const NetworkSpec& spec() const { return spec_; }

private:
    friend Network build_mlp(const NetworkSpec&);
    friend Network build_cnn(const NetworkSpec&);
    friend Network build_network(const NetworkSpec&);

    NetworkSpec spec_;
    std::vector<std::unique_ptr<Layer>> layers_;
    std::vector<Layer*> blocks_;  // bottleneck blocks, build order
};

Network build_mlp(const NetworkSpec& spec);
Network build_cnn(const NetworkSpec& spec);
Network build_network(const NetworkSpec& spec);

/// Standalone bottleneck block: conv1x1 -> N1 -> relu -> conv3x3(stride) -> N2
/// -> relu -> conv1x1 -> N3 -> (+skip) -> relu, output channels 2 * mid_ch.
/// Baseline uses BN in all three slots; P1/P2/P3 swap exactly one for the
/// variant's batch-free normalizer. The projection shortcut (when shapes
/// change) stays conv1x1 + BN.
std::unique_ptr<Layer> build_bottleneck(const BlockVariant& variant, std::size_t in_ch,
                                        std::size_t mid_ch, std::size_t stride, double alpha,
                                        double eps, bool affine, RngState& rng, int& bn_counter);

struct Optimizer {
    enum class Kind { FullBatchGd, Sgd };
    Kind kind = Kind::FullBatchGd;
    double lr = 0.1;
    double momentum = 0.0;
    double weight_decay = 0.0;

    void step(const std::vector<ParamSlot>& params);

private:
    std::vector<Tensor> velocity_;
};

/// One training step tail: backprop, parameter update, BN running update.
void backward_and_update(Network& net, const Tensor& dlogits, Optimizer& opt);

}  // namespace eshift
