#pragma once

#include <functional>
#include <variant>
#include <vector>

#include "voltrans/camera.hpp"
#include "voltrans/grid.hpp"
#include "voltrans/image.hpp"
#include "voltrans/render.hpp"

namespace voltrans {

/// Value stored at a tape node: a scalar (losses), a field, or an image.
using TapeValue = std::variant<double, ScalarGrid, VectorGrid, Image>;

/// Handle to a tape node.
struct Value {
    int id = -1;
    bool valid() const { return id >= 0; }
};

/// Reverse-mode differentiation record. Every operator appends a node holding
/// its output and a closure that maps the node's output gradient to gradient
/// contributions for its parents. backward() replays the closures in reverse
/// creation order, which is a valid topological order by construction; leaves
/// that the objective never touched report zero gradients.
///
/// Tapes are not thread safe; independent optimizations use independent tapes.
class Tape {
public:
    // -- leaves ------------------------------------------------------------
    Value leaf(ScalarGrid g);
    Value leaf(VectorGrid g);

    // -- value access -------------------------------------------------------
    double scalar(Value v) const;
    const ScalarGrid& scalar_grid(Value v) const;
    const VectorGrid& vector_grid(Value v) const;
    const Image& image(Value v) const;

    // -- field operators ------------------------------------------------------
    Value softplus(Value x);
    Value clamp_nonneg(Value x); // max(x, 0) with a relu subgradient
    Value advect_sl(Value rho, Value u, double dt = 1.0);
    Value advect_maccormack(Value rho, Value u, double dt = 1.0);
    Value curl(Value P);
    Value upsample_bspline2(Value g); // scalar or vector node
    Value upsample_linear(Value g);
    Value downsample_avg(Value g);
    Value add(Value a, Value b);

    /// Image formation. When paper_backward is set the backward pass uses the
    /// normalized inverse projection of the incoming image gradient instead of
    /// the exact adjoint (comparison mode; gradient checks will not pass).
    Value render(Value rho, const LightConfig& light, const Camera& cam, const Image* background,
                 const RenderParams& params, bool paper_backward = false);

    // -- scalar objectives ----------------------------------------------------
    Value mse_image(Value img, Image target);
    Value mse_grid(Value g, ScalarGrid target);
    Value center_loss(Value rho, int depth_axis, double c_z);
    Value cfl_loss(Value u);
    Value smoothness_loss(Value u);
    Value scale(Value s, double k);
    Value add_scalar(Value a, Value b);

    // -- differentiation ------------------------------------------------------
    void backward(Value scalar_root);

    /// Gradient of the last backward() pass; zero-filled for untouched leaves.
    ScalarGrid grad_scalar_grid(Value v) const;
    VectorGrid grad_vector_grid(Value v) const;

    void clear();
    std::size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        TapeValue value;
        std::function<void(Tape&, const TapeValue&)> back; // null for leaves
    };

    Value push(TapeValue value, std::function<void(Tape&, const TapeValue&)> back);
    void accumulate(int id, const TapeValue& contribution);
    void accumulate_scalar_grid(int id, ScalarGrid g);
    void accumulate_vector_grid(int id, VectorGrid g);
    void accumulate_scalar(int id, double s);

    const Node& node(Value v) const;

    std::vector<Node> nodes_;
    std::vector<TapeValue> grads_;
    std::vector<char> has_grad_;
};

} // namespace voltrans
