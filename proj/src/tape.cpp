#include "voltrans/tape.hpp"

#include <cmath>

#include "voltrans/loss.hpp"
#include "voltrans/potential.hpp"
#include "voltrans/transport.hpp"

namespace voltrans {

namespace {

// softplus with a numerically safe tail; matches softplus_derivative below
inline double softplus_value(double x) {
    if (x > 30.0) return x;
    if (x < -30.0) return std::exp(x);
    return std::log1p(std::exp(x));
}

inline double softplus_derivative(double x) {
    if (x > 30.0) return 1.0;
    if (x < -30.0) return std::exp(x);
    return 1.0 / (1.0 + std::exp(-x));
}

} // namespace

Value Tape::push(TapeValue value, std::function<void(Tape&, const TapeValue&)> back) {
    nodes_.push_back(Node{std::move(value), std::move(back)});
    return Value{static_cast<int>(nodes_.size()) - 1};
}

const Tape::Node& Tape::node(Value v) const {
    if (!v.valid() || v.id >= static_cast<int>(nodes_.size()))
        throw Error("tape: invalid node handle");
    return nodes_[static_cast<std::size_t>(v.id)];
}

Value Tape::leaf(ScalarGrid g) { return push(std::move(g), nullptr); }
Value Tape::leaf(VectorGrid g) { return push(std::move(g), nullptr); }

double Tape::scalar(Value v) const { return std::get<double>(node(v).value); }
const ScalarGrid& Tape::scalar_grid(Value v) const { return std::get<ScalarGrid>(node(v).value); }
const VectorGrid& Tape::vector_grid(Value v) const { return std::get<VectorGrid>(node(v).value); }
const Image& Tape::image(Value v) const { return std::get<Image>(node(v).value); }

// ---------------------------------------------------------------------------
// gradient accumulation
// ---------------------------------------------------------------------------

void Tape::accumulate(int id, const TapeValue& contribution) {
    const std::size_t n = static_cast<std::size_t>(id);
    if (!has_grad_[n]) {
        grads_[n] = contribution;
        has_grad_[n] = 1;
        return;
    }
    std::visit(
        [&](auto& acc) {
            using T = std::decay_t<decltype(acc)>;
            const T& add = std::get<T>(contribution);
            if constexpr (std::is_same_v<T, double>) {
                acc += add;
            } else {
                for (std::size_t i = 0; i < acc.data.size(); ++i) acc.data[i] += add.data[i];
            }
        },
        grads_[n]);
}

void Tape::accumulate_scalar_grid(int id, ScalarGrid g) { accumulate(id, TapeValue(std::move(g))); }
void Tape::accumulate_vector_grid(int id, VectorGrid g) { accumulate(id, TapeValue(std::move(g))); }
void Tape::accumulate_scalar(int id, double s) { accumulate(id, TapeValue(s)); }

void Tape::backward(Value scalar_root) {
    if (!std::holds_alternative<double>(node(scalar_root).value))
        throw Error("tape: backward root must be a scalar node");
    grads_.assign(nodes_.size(), TapeValue(0.0));
    has_grad_.assign(nodes_.size(), 0);
    accumulate_scalar(scalar_root.id, 1.0);
    for (int i = scalar_root.id; i >= 0; --i) {
        const std::size_t n = static_cast<std::size_t>(i);
        if (!has_grad_[n] || !nodes_[n].back) continue;
        nodes_[n].back(*this, grads_[n]);
    }
}

ScalarGrid Tape::grad_scalar_grid(Value v) const {
    const ScalarGrid& val = scalar_grid(v);
    const std::size_t n = static_cast<std::size_t>(v.id);
    if (n < has_grad_.size() && has_grad_[n]) return std::get<ScalarGrid>(grads_[n]);
    return ScalarGrid(val.res); // untouched leaf: zero gradient
}

VectorGrid Tape::grad_vector_grid(Value v) const {
    const VectorGrid& val = vector_grid(v);
    const std::size_t n = static_cast<std::size_t>(v.id);
    if (n < has_grad_.size() && has_grad_[n]) return std::get<VectorGrid>(grads_[n]);
    return VectorGrid(val.res);
}

void Tape::clear() {
    nodes_.clear();
    grads_.clear();
    has_grad_.clear();
}

// ---------------------------------------------------------------------------
// operators
// ---------------------------------------------------------------------------

Value Tape::softplus(Value x) {
    const ScalarGrid& in = scalar_grid(x);
    ScalarGrid out(in.res);
    for (std::size_t n = 0; n < in.data.size(); ++n) out.data[n] = softplus_value(in.data[n]);
    const int xid = x.id;
    return push(std::move(out), [xid](Tape& t, const TapeValue& g) {
        const ScalarGrid& gout = std::get<ScalarGrid>(g);
        const ScalarGrid& in = t.scalar_grid(Value{xid});
        ScalarGrid gin(in.res);
        for (std::size_t n = 0; n < in.data.size(); ++n)
            gin.data[n] = gout.data[n] * softplus_derivative(in.data[n]);
        t.accumulate_scalar_grid(xid, std::move(gin));
    });
}

Value Tape::clamp_nonneg(Value x) {
    const ScalarGrid& in = scalar_grid(x);
    ScalarGrid out(in.res);
    for (std::size_t n = 0; n < in.data.size(); ++n) out.data[n] = std::max(in.data[n], 0.0);
    const int xid = x.id;
    return push(std::move(out), [xid](Tape& t, const TapeValue& g) {
        const ScalarGrid& gout = std::get<ScalarGrid>(g);
        const ScalarGrid& in = t.scalar_grid(Value{xid});
        ScalarGrid gin(in.res);
        for (std::size_t n = 0; n < in.data.size(); ++n)
            gin.data[n] = in.data[n] > 0.0 ? gout.data[n] : 0.0;
        t.accumulate_scalar_grid(xid, std::move(gin));
    });
}

Value Tape::advect_sl(Value rho, Value u, double dt) {
    ScalarGrid out = voltrans::advect_sl(scalar_grid(rho), vector_grid(u), dt);
    const int rid = rho.id, uid = u.id;
    return push(std::move(out), [rid, uid, dt](Tape& t, const TapeValue& g) {
        AdvectGrads grads = advect_sl_adjoint(std::get<ScalarGrid>(g), t.scalar_grid(Value{rid}),
                                              t.vector_grid(Value{uid}), dt);
        t.accumulate_scalar_grid(rid, std::move(grads.rho));
        t.accumulate_vector_grid(uid, std::move(grads.u));
    });
}

Value Tape::advect_maccormack(Value rho, Value u, double dt) {
    ScalarGrid out = voltrans::advect_maccormack(scalar_grid(rho), vector_grid(u), dt);
    const int rid = rho.id, uid = u.id;
    return push(std::move(out), [rid, uid, dt](Tape& t, const TapeValue& g) {
        AdvectGrads grads = advect_maccormack_adjoint(
            std::get<ScalarGrid>(g), t.scalar_grid(Value{rid}), t.vector_grid(Value{uid}), dt);
        t.accumulate_scalar_grid(rid, std::move(grads.rho));
        t.accumulate_vector_grid(uid, std::move(grads.u));
    });
}

Value Tape::curl(Value P) {
    VectorGrid out = voltrans::curl(vector_grid(P));
    const int pid = P.id;
    return push(std::move(out), [pid](Tape& t, const TapeValue& g) {
        t.accumulate_vector_grid(pid, curl_adjoint(std::get<VectorGrid>(g)));
    });
}

Value Tape::upsample_bspline2(Value g) {
    if (std::holds_alternative<ScalarGrid>(node(g).value)) {
        ScalarGrid out = voltrans::upsample_bspline2(scalar_grid(g));
        const int gid = g.id;
        return push(std::move(out), [gid](Tape& t, const TapeValue& gr) {
            t.accumulate_scalar_grid(gid, upsample_bspline2_adjoint(std::get<ScalarGrid>(gr)));
        });
    }
    VectorGrid out = voltrans::upsample_bspline2(vector_grid(g));
    const int gid = g.id;
    return push(std::move(out), [gid](Tape& t, const TapeValue& gr) {
        t.accumulate_vector_grid(gid, upsample_bspline2_adjoint(std::get<VectorGrid>(gr)));
    });
}

Value Tape::upsample_linear(Value g) {
    if (std::holds_alternative<ScalarGrid>(node(g).value)) {
        ScalarGrid out = voltrans::upsample_linear(scalar_grid(g));
        const int gid = g.id;
        return push(std::move(out), [gid](Tape& t, const TapeValue& gr) {
            t.accumulate_scalar_grid(gid, upsample_linear_adjoint(std::get<ScalarGrid>(gr)));
        });
    }
    VectorGrid out = voltrans::upsample_linear(vector_grid(g));
    const int gid = g.id;
    return push(std::move(out), [gid](Tape& t, const TapeValue& gr) {
        t.accumulate_vector_grid(gid, upsample_linear_adjoint(std::get<VectorGrid>(gr)));
    });
}

Value Tape::downsample_avg(Value g) {
    if (std::holds_alternative<ScalarGrid>(node(g).value)) {
        ScalarGrid out = voltrans::downsample_avg(scalar_grid(g));
        const int gid = g.id;
        return push(std::move(out), [gid](Tape& t, const TapeValue& gr) {
            t.accumulate_scalar_grid(gid, downsample_avg_adjoint(std::get<ScalarGrid>(gr)));
        });
    }
    VectorGrid out = voltrans::downsample_avg(vector_grid(g));
    const int gid = g.id;
    return push(std::move(out), [gid](Tape& t, const TapeValue& gr) {
        t.accumulate_vector_grid(gid, downsample_avg_adjoint(std::get<VectorGrid>(gr)));
    });
}

Value Tape::add(Value a, Value b) {
    const int aid = a.id, bid = b.id;
    if (std::holds_alternative<ScalarGrid>(node(a).value)) {
        const ScalarGrid& ga = scalar_grid(a);
        const ScalarGrid& gb = scalar_grid(b);
        require_same_res(ga.res, gb.res, "tape add");
        ScalarGrid out(ga.res);
        for (std::size_t n = 0; n < out.data.size(); ++n) out.data[n] = ga.data[n] + gb.data[n];
        return push(std::move(out), [aid, bid](Tape& t, const TapeValue& g) {
            t.accumulate(aid, g);
            t.accumulate(bid, g);
        });
    }
    const VectorGrid& ga = vector_grid(a);
    const VectorGrid& gb = vector_grid(b);
    require_same_res(ga.res, gb.res, "tape add");
    VectorGrid out(ga.res);
    for (std::size_t n = 0; n < out.data.size(); ++n) out.data[n] = ga.data[n] + gb.data[n];
    return push(std::move(out), [aid, bid](Tape& t, const TapeValue& g) {
        t.accumulate(aid, g);
        t.accumulate(bid, g);
    });
}

Value Tape::render(Value rho, const LightConfig& light, const Camera& cam,
                   const Image* background, const RenderParams& params, bool paper_backward) {
    const ScalarGrid& r = scalar_grid(rho);
    Image out = voltrans::render(r, light, cam, background, params);
    const int rid = rho.id;
    // the background image is borrowed; copy what backward needs
    const bool has_bg = background != nullptr;
    const Image bg = has_bg ? *background : Image();
    return push(std::move(out),
                [rid, light, cam, has_bg, bg, params, paper_backward](Tape& t, const TapeValue& g) {
                    const Image& gimg = std::get<Image>(g);
                    const ScalarGrid& r = t.scalar_grid(Value{rid});
                    if (paper_backward) {
                        t.accumulate_scalar_grid(
                            rid, unproject(gimg, cam, r.res, params.step));
                        return;
                    }
                    t.accumulate_scalar_grid(
                        rid, render_full_adjoint(gimg, r, light, cam, has_bg ? &bg : nullptr,
                                                 params));
                });
}

// ---------------------------------------------------------------------------
// scalar objectives
// ---------------------------------------------------------------------------

Value Tape::mse_image(Value img, Image target) {
    const Image& a = image(img);
    const double value = voltrans::mse(a, target);
    const int iid = img.id;
    return push(TapeValue(value), [iid, target = std::move(target)](Tape& t, const TapeValue& g) {
        const double gs = std::get<double>(g);
        Image grad = voltrans::mse_gradient(t.image(Value{iid}), target);
        for (double& v : grad.data) v *= gs;
        t.accumulate(iid, TapeValue(std::move(grad)));
    });
}

Value Tape::mse_grid(Value gv, ScalarGrid target) {
    const ScalarGrid& a = scalar_grid(gv);
    const double value = voltrans::mse(a, target);
    const int gid = gv.id;
    return push(TapeValue(value), [gid, target = std::move(target)](Tape& t, const TapeValue& g) {
        const double gs = std::get<double>(g);
        ScalarGrid grad = voltrans::mse_gradient(t.scalar_grid(Value{gid}), target);
        for (double& v : grad.data) v *= gs;
        t.accumulate_scalar_grid(gid, std::move(grad));
    });
}

Value Tape::center_loss(Value rho, int depth_axis, double c_z) {
    const double value = voltrans::center_loss(scalar_grid(rho), depth_axis, c_z);
    const int rid = rho.id;
    return push(TapeValue(value), [rid, depth_axis, c_z](Tape& t, const TapeValue& g) {
        const double gs = std::get<double>(g);
        ScalarGrid grad = center_loss_gradient(t.scalar_grid(Value{rid}), depth_axis, c_z);
        for (double& v : grad.data) v *= gs;
        t.accumulate_scalar_grid(rid, std::move(grad));
    });
}

Value Tape::cfl_loss(Value u) {
    const double value = voltrans::cfl_loss(vector_grid(u));
    const int uid = u.id;
    return push(TapeValue(value), [uid](Tape& t, const TapeValue& g) {
        const double gs = std::get<double>(g);
        VectorGrid grad = cfl_loss_gradient(t.vector_grid(Value{uid}));
        for (double& v : grad.data) v *= gs;
        t.accumulate_vector_grid(uid, std::move(grad));
    });
}

Value Tape::smoothness_loss(Value u) {
    const double value = voltrans::smoothness_loss(vector_grid(u));
    const int uid = u.id;
    return push(TapeValue(value), [uid](Tape& t, const TapeValue& g) {
        const double gs = std::get<double>(g);
        VectorGrid grad = smoothness_loss_gradient(t.vector_grid(Value{uid}));
        for (double& v : grad.data) v *= gs;
        t.accumulate_vector_grid(uid, std::move(grad));
    });
}

Value Tape::scale(Value s, double k) {
    const double value = scalar(s) * k;
    const int sid = s.id;
    return push(TapeValue(value), [sid, k](Tape& t, const TapeValue& g) {
        t.accumulate_scalar(sid, std::get<double>(g) * k);
    });
}

Value Tape::add_scalar(Value a, Value b) {
    const double value = scalar(a) + scalar(b);
    const int aid = a.id, bid = b.id;
    return push(TapeValue(value), [aid, bid](Tape& t, const TapeValue& g) {
        t.accumulate_scalar(aid, std::get<double>(g));
        t.accumulate_scalar(bid, std::get<double>(g));
    });
}

} // namespace voltrans
