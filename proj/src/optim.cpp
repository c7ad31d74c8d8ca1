#include "voltrans/optim.hpp"

#include <algorithm>
#include <cmath>

#include "voltrans/eval.hpp"
#include "voltrans/rng.hpp"
#include "voltrans/transport.hpp"

namespace voltrans {

double lr_decay(double base_lr, long iteration, long offset, double decay) {
    const double denom = 1.0 + static_cast<double>(iteration - offset) * decay;
    if (!(denom > 0.0)) throw Error("lr_decay: nonpositive denominator");
    return base_lr / denom;
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               double lr, const AdamConfig& cfg, const std::string& param_name) {
    if (params.size() != grads.size())
        throw ShapeError("adam_step: parameter/gradient size mismatch for " + param_name);
    if (state.m.empty()) {
        state.m.assign(params.size(), 0.0);
        state.v.assign(params.size(), 0.0);
    } else if (state.m.size() != params.size()) {
        throw ShapeError("adam_step: state size mismatch for " + param_name);
    }
    for (double g : grads)
        if (!std::isfinite(g))
            throw NumericError("adam_step: non-finite gradient for " + param_name);

    ++state.step;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * grads[i];
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * grads[i] * grads[i];
        const double mhat = state.m[i] / bc1;
        const double vhat = state.v[i] / bc2;
        params[i] -= lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
}

// ---------------------------------------------------------------------------
// gradcheck
// ---------------------------------------------------------------------------

namespace {

std::vector<double>& leaf_data(LeafValue& v) {
    if (auto* s = std::get_if<ScalarGrid>(&v)) return s->data;
    return std::get<VectorGrid>(v).data;
}

Value register_leaf(Tape& tape, const LeafValue& v) {
    if (const auto* s = std::get_if<ScalarGrid>(&v)) return tape.leaf(*s);
    return tape.leaf(std::get<VectorGrid>(v));
}

double evaluate(const ObjectiveBuilder& fn, const std::vector<LeafValue>& point) {
    Tape tape;
    std::vector<Value> leaves;
    leaves.reserve(point.size());
    for (const LeafValue& v : point) leaves.push_back(register_leaf(tape, v));
    return tape.scalar(fn(tape, leaves));
}

} // namespace

GradCheckResult gradcheck(const ObjectiveBuilder& fn, const std::vector<LeafValue>& point,
                          const GradCheckOptions& opts) {
    if (point.empty()) throw Error("gradcheck: no leaves");
    if (!(opts.h > 0.0)) throw Error("gradcheck: h must be > 0");

    // analytic gradients
    Tape tape;
    std::vector<Value> leaves;
    for (const LeafValue& v : point) leaves.push_back(register_leaf(tape, v));
    const Value root = fn(tape, leaves);
    if (!std::isfinite(tape.scalar(root))) throw NumericError("gradcheck: objective not finite");
    tape.backward(root);
    std::vector<std::vector<double>> analytic;
    for (std::size_t li = 0; li < point.size(); ++li) {
        if (std::holds_alternative<ScalarGrid>(point[li]))
            analytic.push_back(tape.grad_scalar_grid(leaves[li]).data);
        else
            analytic.push_back(tape.grad_vector_grid(leaves[li]).data);
    }

    const int per_leaf = std::max(
        opts.samples_per_leaf,
        static_cast<int>((opts.min_total_samples + point.size() - 1) / point.size()));

    GradCheckResult result;
    Rng rng(opts.seed);
    std::vector<LeafValue> probe = point;
    for (std::size_t li = 0; li < point.size(); ++li) {
        std::vector<double>& data = leaf_data(probe[li]);
        for (int s = 0; s < per_leaf; ++s) {
            const std::size_t idx = static_cast<std::size_t>(rng.below(data.size()));
            const double x0 = data[idx];
            const double h = opts.h * std::max(1.0, std::abs(x0));
            data[idx] = x0 + h;
            const double fp = evaluate(fn, probe);
            data[idx] = x0 - h;
            const double fm = evaluate(fn, probe);
            data[idx] = x0;
            if (!std::isfinite(fp) || !std::isfinite(fm))
                throw NumericError("gradcheck: non-finite probe value");
            const double numeric = (fp - fm) / (2.0 * h);
            const double a = analytic[li][idx];
            const double rel = std::abs(a - numeric) /
                               std::max({std::abs(a), std::abs(numeric), opts.denom_floor});
            ++result.samples;
            if (rel > result.max_rel_err) {
                result.max_rel_err = rel;
                result.worst_leaf = static_cast<int>(li);
                result.worst_coord = idx;
                result.worst_analytic = a;
                result.worst_numeric = numeric;
            }
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// reconstruction
// ---------------------------------------------------------------------------

void ReconProblem::validate(const std::string& source) const {
    auto bad = [&](const std::string& field, const std::string& why) {
        throw ConfigError(source, field, why);
    };
    if (input_frames.size() < 2) bad("input_frames", "need at least two frames");
    for (const Image& f : input_frames)
        if (f.width != input_camera.width || f.height != input_camera.height)
            bad("input_frames", "frame resolution does not match the camera");
    for (const auto& [cam, frames] : extra_views)
        if (frames.size() != input_frames.size())
            bad("extra_views", "side view frame count differs from the input view");
    if (!prototypes.empty() && prototypes.size() != input_frames.size())
        bad("prototypes", "need one prototype per frame when provided");
    if (config.levels < 1) bad("levels", "need at least one level");
    ladder_dims(res, config.levels); // throws if the ladder does not divide
    if (config.schedule.total_iters < 1) bad("total_iters", "must be >= 1");
    if (static_cast<int>(config.schedule.level_growth.size()) != config.levels - 1)
        bad("level_growth", "need exactly levels-1 growth iterations");
    validate_camera(input_camera, source);
    validate_light(light, source);
}

namespace {

struct ParamSet {
    ScalarGrid rho_raw;
    std::vector<MultiScalePotential> potentials; // per step, active levels only
};

int active_count(const std::vector<int>& growth, int iter) {
    int active = 1;
    for (int g : growth)
        if (iter >= g) ++active;
    return active;
}

int active_steps_at(const std::vector<std::pair<int, int>>& growth, int iter, int max_steps) {
    int steps = max_steps;
    for (const auto& [it, s] : growth)
        if (iter >= it) steps = s;
    return std::min(steps, max_steps);
}

struct ForwardNodes {
    Value total;
    std::vector<Value> velocities; // composed curl per active step
    LossBreakdown terms;
};

// builds the whole objective for the active schedule; leaves are registered
// by the caller so gradcheck can reuse the same builder
ForwardNodes build_objective(Tape& tape, const ReconProblem& problem, Value rho_raw_leaf,
                             const std::vector<std::vector<Value>>& potential_leaves,
                             int active_steps, const std::vector<GridDims>& dims) {
    const ReconConfig& cfg = problem.config;
    const LossWeights& w = cfg.weights;
    const int total_levels = static_cast<int>(dims.size());
    const Image* background = problem.background.data.empty() ? nullptr : &problem.background;

    const double c_z = cfg.center_z >= 0.0
                           ? cfg.center_z
                           : 0.5 * (cfg.depth_axis == 0   ? problem.res.nx
                                    : cfg.depth_axis == 1 ? problem.res.ny
                                                          : problem.res.nz);

    ForwardNodes out;
    Value rho0 = tape.softplus(rho_raw_leaf);

    // per-frame image loss, averaged over the participating views
    auto image_term = [&](Value rho, int frame) {
        Value term = tape.mse_image(
            tape.render(rho, problem.light, problem.input_camera, background, cfg.render,
                        cfg.flags.paper_backward),
            problem.input_frames[static_cast<std::size_t>(frame)]);
        if (!problem.extra_views.empty()) {
            for (const auto& [cam, frames] : problem.extra_views)
                term = tape.add_scalar(
                    term, tape.mse_image(tape.render(rho, problem.light, cam, background,
                                                     cfg.render, cfg.flags.paper_backward),
                                         frames[static_cast<std::size_t>(frame)]));
            term = tape.scale(term, 1.0 / (1.0 + static_cast<double>(problem.extra_views.size())));
        }
        return term;
    };

    Value target_sum = image_term(rho0, 0);
    Value center_sum = tape.center_loss(rho0, cfg.depth_axis, c_z);
    Value proxy_sum;
    Value cfl_sum;
    Value smooth_sum;

    Value prev = rho0;
    for (int t = 0; t < active_steps; ++t) {
        const std::vector<Value>& levels = potential_leaves[static_cast<std::size_t>(t)];
        const int active_levels = static_cast<int>(levels.size());

        // cumulative composition; the velocity at each scale feeds the
        // smoothness term, the finest one does the transport
        Value x = levels[0];
        Value smooth_t = tape.smoothness_loss(tape.curl(x));
        for (int l = 1; l < active_levels; ++l) {
            x = tape.add(tape.upsample_bspline2(x), levels[static_cast<std::size_t>(l)]);
            smooth_t = tape.add_scalar(smooth_t, tape.smoothness_loss(tape.curl(x)));
        }
        for (int l = active_levels; l < total_levels; ++l) x = tape.upsample_bspline2(x);
        Value u = tape.curl(x);
        out.velocities.push_back(u);

        Value cfl_t;
        if (cfg.flags.cfl_per_level) {
            // speed limit on each residual's velocity contribution at the
            // finest resolution
            for (int l = 0; l < active_levels; ++l) {
                Value chain = levels[static_cast<std::size_t>(l)];
                for (int k = l + 1; k < total_levels; ++k) chain = tape.upsample_bspline2(chain);
                Value term = tape.cfl_loss(tape.curl(chain));
                cfl_t = cfl_t.valid() ? tape.add_scalar(cfl_t, term) : term;
            }
        } else {
            cfl_t = tape.cfl_loss(u);
        }

        Value rho_next = tape.advect_maccormack(prev, u);
        if (cfg.flags.clamp_density) rho_next = tape.clamp_nonneg(rho_next);

        target_sum = tape.add_scalar(target_sum, image_term(rho_next, t + 1));
        center_sum = tape.add_scalar(center_sum, tape.center_loss(rho_next, cfg.depth_axis, c_z));
        if (!problem.prototypes.empty()) {
            Value p = tape.mse_grid(rho_next, problem.prototypes[static_cast<std::size_t>(t + 1)]);
            proxy_sum = proxy_sum.valid() ? tape.add_scalar(proxy_sum, p) : p;
        }
        cfl_sum = cfl_sum.valid() ? tape.add_scalar(cfl_sum, cfl_t) : cfl_t;
        smooth_sum = smooth_sum.valid() ? tape.add_scalar(smooth_sum, smooth_t) : smooth_t;
        prev = rho_next;
    }

    out.terms.target = tape.scalar(target_sum);
    out.terms.center = tape.scalar(center_sum);
    out.terms.proxy = proxy_sum.valid() ? tape.scalar(proxy_sum) : 0.0;
    out.terms.cfl = cfl_sum.valid() ? tape.scalar(cfl_sum) : 0.0;
    out.terms.smooth = smooth_sum.valid() ? tape.scalar(smooth_sum) : 0.0;

    Value total = tape.scale(target_sum, w.target);
    total = tape.add_scalar(total, tape.scale(center_sum, w.center));
    if (proxy_sum.valid()) total = tape.add_scalar(total, tape.scale(proxy_sum, w.proxy));
    if (cfl_sum.valid()) total = tape.add_scalar(total, tape.scale(cfl_sum, w.cfl));
    if (smooth_sum.valid()) total = tape.add_scalar(total, tape.scale(smooth_sum, w.smooth));
    out.total = total;
    return out;
}

} // namespace

ReconResult reconstruct(const ReconProblem& problem) {
    problem.validate();
    const ReconConfig& cfg = problem.config;
    const int max_steps = problem.steps();
    const std::vector<GridDims> dims = ladder_dims(problem.res, cfg.levels);

    ParamSet params;
    params.rho_raw = ScalarGrid(problem.res, cfg.rho0_raw_init);
    params.potentials.resize(static_cast<std::size_t>(max_steps));
    for (auto& msp : params.potentials) msp.levels.push_back(VectorGrid(dims[0]));

    std::vector<AdamState> rho_state(1);
    // adam state per (step, level); grown lazily alongside the potentials
    std::vector<std::vector<AdamState>> pot_state(static_cast<std::size_t>(max_steps));
    for (auto& s : pot_state) s.resize(1);

    ReconResult result;
    ParamSet last_good = params;

    for (int iter = 0; iter < cfg.schedule.total_iters; ++iter) {
        const int want_levels = active_count(cfg.schedule.level_growth, iter);
        for (std::size_t t = 0; t < params.potentials.size(); ++t) {
            while (static_cast<int>(params.potentials[t].levels.size()) < want_levels) {
                const std::size_t l = params.potentials[t].levels.size();
                params.potentials[t].levels.push_back(VectorGrid(dims[l])); // zero residual
                pot_state[t].emplace_back();
            }
        }
        const int steps = std::max(
            1, active_steps_at(cfg.schedule.frame_growth, iter, max_steps));

        Tape tape;
        Value rho_leaf = tape.leaf(params.rho_raw);
        std::vector<std::vector<Value>> pot_leaves(static_cast<std::size_t>(steps));
        for (int t = 0; t < steps; ++t)
            for (const VectorGrid& lvl : params.potentials[static_cast<std::size_t>(t)].levels)
                pot_leaves[static_cast<std::size_t>(t)].push_back(tape.leaf(lvl));

        ForwardNodes fwd = build_objective(tape, problem, rho_leaf, pot_leaves, steps, dims);
        const double total = tape.scalar(fwd.total);

        if (!std::isfinite(total)) {
            params = last_good;
            result.diverged = true;
            break;
        }

        tape.backward(fwd.total);

        const double lr = lr_decay(cfg.lr, iter, cfg.lr_decay_offset, cfg.lr_decay_rate);
        {
            ScalarGrid g = tape.grad_scalar_grid(rho_leaf);
            adam_step(params.rho_raw.data, g.data, rho_state[0], lr, cfg.adam, "rho0_raw");
        }
        for (int t = 0; t < steps; ++t)
            for (std::size_t l = 0; l < pot_leaves[static_cast<std::size_t>(t)].size(); ++l) {
                VectorGrid g = tape.grad_vector_grid(pot_leaves[static_cast<std::size_t>(t)][l]);
                adam_step(params.potentials[static_cast<std::size_t>(t)].levels[l].data, g.data,
                          pot_state[static_cast<std::size_t>(t)][l], lr, cfg.adam,
                          "potential[" + std::to_string(t) + "][" + std::to_string(l) + "]");
            }

        if (iter % cfg.log_every == 0 || iter + 1 == cfg.schedule.total_iters) {
            IterationLog log;
            log.iter = iter;
            log.lr = lr;
            log.total = total;
            log.terms = fwd.terms;
            log.active_levels = want_levels;
            log.active_steps = steps;
            for (Value u : fwd.velocities) {
                const VectorGrid& uval = tape.vector_grid(u);
                log.max_interior_div = std::max(log.max_interior_div, max_interior_divergence(uval));
                log.max_speed = std::max(log.max_speed, max_abs_component(uval));
            }
            result.log.push_back(log);
        }
        last_good = params;
    }

    // final forward pass over the full sequence
    result.rho0 = ScalarGrid(problem.res);
    for (std::size_t n = 0; n < params.rho_raw.data.size(); ++n) {
        const double x = params.rho_raw.data[n];
        result.rho0.data[n] = x > 30.0 ? x : (x < -30.0 ? std::exp(x) : std::log1p(std::exp(x)));
    }
    result.potentials = params.potentials;
    result.frames.push_back(result.rho0);
    for (int t = 0; t < max_steps; ++t) {
        // levels added late in the schedule might still be missing; compose what exists
        MultiScalePotential& msp = result.potentials[static_cast<std::size_t>(t)];
        VectorGrid x = msp.levels.front();
        for (std::size_t l = 1; l < msp.levels.size(); ++l) {
            VectorGrid up = upsample_bspline2(x);
            for (std::size_t n = 0; n < up.data.size(); ++n)
                up.data[n] += msp.levels[l].data[n];
            x = std::move(up);
        }
        for (std::size_t l = msp.levels.size(); l < dims.size(); ++l) x = upsample_bspline2(x);
        result.velocities.push_back(curl(x));
        ScalarGrid next = advect_maccormack(result.frames.back(), result.velocities.back());
        if (cfg.flags.clamp_density)
            for (double& v : next.data) v = std::max(v, 0.0);
        result.frames.push_back(std::move(next));
    }

    const Image* background = problem.background.data.empty() ? nullptr : &problem.background;
    double rmse_sum = 0.0;
    for (std::size_t t = 0; t < result.frames.size(); ++t) {
        const Image img = render(result.frames[t], problem.light, problem.input_camera,
                                 background, cfg.render);
        rmse_sum += rmse_image(img, problem.input_frames[t]);
    }
    result.input_rmse = rmse_sum / static_cast<double>(result.frames.size());
    return result;
}

ObjectiveBuilder recon_objective_builder(ReconProblem problem) {
    problem.validate();
    return [problem = std::move(problem)](Tape& tape, const std::vector<Value>& leaves) {
        const int steps = problem.steps();
        const int levels = problem.config.levels;
        if (static_cast<int>(leaves.size()) != 1 + steps * levels)
            throw ShapeError("recon objective: unexpected leaf count");
        std::vector<std::vector<Value>> pot(static_cast<std::size_t>(steps));
        for (int t = 0; t < steps; ++t)
            for (int l = 0; l < levels; ++l)
                pot[static_cast<std::size_t>(t)].push_back(
                    leaves[static_cast<std::size_t>(1 + t * levels + l)]);
        const std::vector<GridDims> dims = ladder_dims(problem.res, levels);
        return build_objective(tape, problem, leaves[0], pot, steps, dims).total;
    };
}

// ---------------------------------------------------------------------------
// gradcheck scene
// ---------------------------------------------------------------------------

namespace {

ScalarGrid cosine_field(const GridDims& res, Rng& rng, double base, double amplitude) {
    ScalarGrid g(res);
    const double fx = rng.uniform(0.6, 1.4), fy = rng.uniform(0.6, 1.4), fz = rng.uniform(0.6, 1.4);
    const double px = rng.uniform(0.0, 6.28), py = rng.uniform(0.0, 6.28), pz = rng.uniform(0.0, 6.28);
    for (int k = 0; k < res.nz; ++k)
        for (int j = 0; j < res.ny; ++j)
            for (int i = 0; i < res.nx; ++i)
                g.at(i, j, k) = base + amplitude * std::cos(fx * 6.28 * i / res.nx + px) *
                                           std::cos(fy * 6.28 * j / res.ny + py) *
                                           std::cos(fz * 6.28 * k / res.nz + pz);
    return g;
}

double softplus_inverse(double y) { return std::log(std::expm1(y)); }

} // namespace

GradCheckScene make_gradcheck_scene(int size, std::uint64_t seed) {
    if (size < 4) throw Error("make_gradcheck_scene: size must be >= 4");
    const GridDims res{size, size, size};
    const int levels = (size % 2 == 0) ? 2 : 1;
    const std::vector<GridDims> dims = ladder_dims(res, levels);

    for (std::uint64_t attempt = 0;; ++attempt) {
        Rng rng(seed + attempt * 7919ULL);

        GradCheckScene scene;
        ReconProblem& problem = scene.problem;
        problem.res = res;
        problem.light.direction = {0.0, -1.0, 0.0};
        problem.light.intensity = 0.7;
        problem.light.ambient = 0.2;
        problem.light.absorption = 0.6;

        Camera cam;
        const Vec3 center{0.5 * size, 0.5 * size, 0.5 * size};
        cam.position = center - Vec3{0, 0, 4.0 * size};
        cam.forward = {0, 0, 1};
        cam.up = {0, 1, 0};
        cam.fov_y_deg = 25.0;
        cam.width = size + 2;
        cam.height = size + 2;
        cam.near = 0.0;
        cam.far = 8.0 * size;
        problem.input_camera = cam;

        problem.config.levels = levels;
        problem.config.schedule.level_growth.assign(static_cast<std::size_t>(levels - 1), 0);
        problem.config.render.step = 0.5;
        problem.config.render.light_gradients = true;
        problem.config.depth_axis = 2;

        // parameter point: smooth density raw values and gentle potentials
        const ScalarGrid rho_point = cosine_field(res, rng, 0.4, 0.2);
        ScalarGrid raw(res);
        for (std::size_t n = 0; n < raw.data.size(); ++n)
            raw.data[n] = softplus_inverse(rho_point.data[n]);
        scene.point.emplace_back(raw);
        std::vector<MultiScalePotential> pots(1);
        for (int l = 0; l < levels; ++l) {
            VectorGrid p(dims[static_cast<std::size_t>(l)]);
            for (double& v : p.data) v = rng.uniform(-0.12, 0.12);
            pots[0].levels.push_back(p);
            scene.point.emplace_back(std::move(p));
        }

        // image targets rendered from a nearby ground truth
        const ScalarGrid rho_gt = cosine_field(res, rng, 0.45, 0.2);
        const RenderParams rp = problem.config.render;
        problem.input_frames.push_back(render(rho_gt, problem.light, cam, nullptr, rp));
        problem.input_frames.push_back(render(rho_gt, problem.light, cam, nullptr, rp));

        // conditioning: reject instances with limiter or interpolation kinks
        // in finite-difference reach, or velocities near the speed-limit kink
        const VectorGrid u = curl(compose_multiscale(pots[0]));
        MacCormackStats stats;
        (void)advect_maccormack(rho_point, u, 1.0, &stats);
        const double umax = max_abs_component(u);
        if (stats.clamped_cells == 0 && stats.min_clamp_margin > 3e-4 &&
            stats.min_face_distance > 1e-3 && umax < 0.9) {
            return scene;
        }
        if (attempt > 256) throw Error("make_gradcheck_scene: conditioning failed");
    }
}

// ---------------------------------------------------------------------------
// view ablation
// ---------------------------------------------------------------------------

AblationReport ablate_views(const AblationScene& scene, const ReconConfig& base_config,
                            const std::vector<AblationVariant>& variants, int heldout_camera) {
    AblationReport report;
    for (const AblationVariant& variant : variants) {
        if (variant.camera_indices.empty())
            throw Error("ablate_views: variant '" + variant.name + "' has no cameras");

        ReconProblem problem;
        problem.res = scene.res;
        problem.light = scene.light;
        problem.config = base_config;
        problem.config.render.step = scene.render_step;
        if (!variant.center_loss) problem.config.weights.center = 0.0;
        const int input = variant.camera_indices.front();
        problem.input_camera = scene.cameras.at(static_cast<std::size_t>(input));
        problem.input_frames = scene.views.at(static_cast<std::size_t>(input));
        for (std::size_t vi = 1; vi < variant.camera_indices.size(); ++vi) {
            const int ci = variant.camera_indices[vi];
            problem.extra_views.emplace_back(scene.cameras.at(static_cast<std::size_t>(ci)),
                                             scene.views.at(static_cast<std::size_t>(ci)));
        }

        ReconResult recon = reconstruct(problem);

        AblationRun run;
        run.name = variant.name;
        run.input_rmse = recon.input_rmse;

        const Camera& held_cam = scene.cameras.at(static_cast<std::size_t>(heldout_camera));
        const auto& held_views = scene.views.at(static_cast<std::size_t>(heldout_camera));
        double held = 0.0, vol = 0.0, centroid = 0.0;
        const double c_z = base_config.center_z >= 0.0
                               ? base_config.center_z
                               : 0.5 * (base_config.depth_axis == 0   ? scene.res.nx
                                        : base_config.depth_axis == 1 ? scene.res.ny
                                                                      : scene.res.nz);
        for (std::size_t t = 0; t < recon.frames.size(); ++t) {
            const Image img = render(recon.frames[t], scene.light, held_cam, nullptr,
                                     problem.config.render);
            held += rmse_image(img, held_views.at(t));
            vol += rmse_volume(recon.frames[t], scene.gt_densities.at(t));
            centroid += std::abs(density_centroid(recon.frames[t], base_config.depth_axis) - c_z);
        }
        const double inv = 1.0 / static_cast<double>(recon.frames.size());
        run.heldout_rmse = held * inv;
        run.volume_rmse = vol * inv;
        run.centroid_depth_dev = centroid * inv;
        for (const VectorGrid& u : recon.velocities) {
            run.max_speed = std::max(run.max_speed, max_abs_component(u));
            run.max_interior_div = std::max(run.max_interior_div, max_interior_divergence(u));
        }
        report.runs.push_back(std::move(run));
    }
    return report;
}

} // namespace voltrans
