#include "srbvol/volume.hpp"

#include "srbvol/error.hpp"
#include "srbvol/random.hpp"

#include <cmath>
#include <future>
#include <sstream>

namespace srbvol {

const char* to_string(VolumeMethod method) {
  switch (method) {
    case VolumeMethod::exact_1d: return "exact_1d";
    case VolumeMethod::monte_carlo: return "monte_carlo";
    case VolumeMethod::closed_form: return "closed_form";
  }
  return "?";
}

BallEnvelope ball_envelope(const Frame& frame, double eps_mvee) {
  const int k = frame.k();
  const auto model = john_model(frame, -1, eps_mvee);
  // The MVEE only sees sampled directions; certify the enclosure on a finer
  // polished search before trusting the envelope.
  SphereSearchOptions so;
  so.grid = k == 2 ? 4096 : 8192;
  so.candidates = 16;
  const auto worst = maximize_on_sphere(
      k, [&](const Vector& c) { return model.gram_norm(c) / frame.coord_norm(c); }, so);
  BallEnvelope env;
  env.gram = model.gram;
  env.scale = std::max(1.0 + eps_mvee, worst.value * (1.0 + 1e-6));
  env.volume = std::pow(env.scale, k) * unit_ball_volume(k) / std::sqrt(model.gram.determinant());
  Eigen::LLT<Matrix> llt(model.gram);
  // c = scale * L^{-T} y maps ||y|| <= 1 onto c^T G c <= scale^2.
  Matrix linv_t = llt.matrixU().solve(Matrix::Identity(k, k));
  env.sampler = env.scale * linv_t;
  return env;
}

namespace {

struct BatchCounts {
  std::vector<long> hits;
  long n = 0;
};

BatchCounts count_batch(const std::vector<const Frame*>& frames,
                        const std::vector<BallEnvelope>& envs, long batch_size,
                        std::uint64_t seed, std::uint64_t batch) {
  const int k = frames.front()->k();
  const int dim = frames.front()->dim();
  Rng rng(mix_seed(seed, batch));
  BatchCounts out;
  out.hits.assign(frames.size(), 0);
  out.n = batch_size;
  Vector y(k), c(k), x(dim);
  const double inv_k = 1.0 / k;
  for (long s = 0; s < batch_size; ++s) {
    double r2 = 0.0;
    for (int i = 0; i < k; ++i) {
      y[i] = rng.normal();
      r2 += y[i] * y[i];
    }
    const double radius = std::pow(rng.uniform(), inv_k) / std::sqrt(r2);
    y *= radius;
    for (std::size_t f = 0; f < frames.size(); ++f) {
      c.noalias() = envs[f].sampler * y;
      x.noalias() = frames[f]->basis() * c;
      if (frames[f]->space().norm(x) <= 1.0) ++out.hits[f];
    }
  }
  return out;
}

}  // namespace

std::vector<VolumeEstimate> coupled_ball_volumes(const std::vector<const Frame*>& frames,
                                                 const MonteCarloOptions& opt) {
  if (frames.empty()) return {};
  for (auto* f : frames) {
    if (f->k() != frames.front()->k() || f->k() < 2) {
      throw InputError("coupled_ball_volumes: frames need a common k >= 2");
    }
  }
  std::vector<BallEnvelope> envs;
  for (auto* f : frames) envs.push_back(ball_envelope(*f, opt.eps_mvee));
  const int group = std::max(1, opt.workers);
  std::vector<long> hits(frames.size(), 0);
  long n = 0;
  bool done = false;
  bool reached = false;
  std::uint64_t next = 0;
  auto rel_errors = [&]() {
    double acc = 0.0;
    for (auto h : hits) {
      const double p = static_cast<double>(h) / static_cast<double>(n);
      if (h == 0) return std::numeric_limits<double>::infinity();
      acc += (1.0 - p) / (p * static_cast<double>(n));
    }
    return std::sqrt(acc);
  };
  while (!done) {
    std::vector<BatchCounts> results(static_cast<std::size_t>(group));
    if (group == 1) {
      results[0] = count_batch(frames, envs, opt.batch_size, opt.seed, next);
    } else {
      std::vector<std::future<BatchCounts>> fut;
      for (int g = 0; g < group; ++g) {
        fut.push_back(std::async(std::launch::async, count_batch, std::cref(frames),
                                 std::cref(envs), opt.batch_size, opt.seed,
                                 next + static_cast<std::uint64_t>(g)));
      }
      for (int g = 0; g < group; ++g) results[static_cast<std::size_t>(g)] = fut[static_cast<std::size_t>(g)].get();
    }
    for (const auto& r : results) {
      for (std::size_t f = 0; f < frames.size(); ++f) hits[f] += r.hits[f];
      n += r.n;
      ++next;
      if (next == 1) {
        for (auto h : hits) {
          if (static_cast<double>(h) / static_cast<double>(n) < opt.acceptance_floor) {
            throw ConditioningError(
                "unit_ball_coord_volume: acceptance rate below floor; the frame is "
                "badly conditioned for this norm, try a smaller k");
          }
        }
      }
      if (rel_errors() <= opt.target_rel_err) {
        reached = true;
        done = true;
        break;
      }
      if (n >= opt.max_samples) {
        done = true;
        break;
      }
    }
  }
  std::vector<VolumeEstimate> out;
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const double p = static_cast<double>(hits[f]) / static_cast<double>(n);
    VolumeEstimate e;
    e.value = envs[f].volume * p;
    e.std_error = envs[f].volume * std::sqrt(p * (1.0 - p) / static_cast<double>(n));
    e.n_samples = n;
    e.method = VolumeMethod::monte_carlo;
    e.reached_target = reached;
    out.push_back(e);
  }
  return out;
}

VolumeEstimate unit_ball_coord_volume(const Frame& frame, const MonteCarloOptions& options) {
  if (frame.k() == 1) {
    VolumeEstimate e;
    e.value = 2.0 / frame.space().norm(frame.vec(0));
    e.method = VolumeMethod::exact_1d;
    return e;
  }
  return coupled_ball_volumes({&frame}, options).front();
}

VolumeEstimate induced_volume_parallelepiped(const Frame& frame, const MonteCarloOptions& options) {
  const auto ball = unit_ball_coord_volume(frame, options);
  VolumeEstimate out = ball;
  const double wk = unit_ball_volume(frame.k());
  out.value = wk / ball.value;
  out.std_error = out.value * ball.rel_error();
  return out;
}

double orthogonality_defect(const Frame& frame) {
  const Frame unit = frame.normalized();
  const int k = unit.k();
  if (k == 1) return 1.0;
  double total = 0.0;
  for (int i = 0; i < k; ++i) {
    // |pi_i w| = |c_i| |v_i| = |c_i| for w = V c.
    auto ratio = [&](const Vector& c) { return std::abs(c[i]) / unit.coord_norm(c); };
    total += maximize_on_sphere(k, ratio).value;
  }
  return total;
}

DetResult det_restricted(const LinearMap& a, const Frame& frame, const MonteCarloOptions& options) {
  if (a.dim() != frame.dim()) throw InputError("det_restricted: operator and frame dimensions differ");
  const Matrix image = a.apply(frame.basis());
  DetResult out;
  if (!Frame::is_independent(image)) {
    out.value = 0.0;
    out.log_value = -std::numeric_limits<double>::infinity();
    out.degenerate = true;
    return out;
  }
  const Frame image_frame(frame.space(), image);
  if (frame.k() == 1) {
    const double ratio = frame.space().norm(image.col(0)) / frame.space().norm(frame.vec(0));
    out.value = ratio;
    out.log_value = std::log(ratio);
    out.method = VolumeMethod::exact_1d;
    return out;
  }
  // A E = E: the ratio of coordinate volumes is |det| of the coordinate change.
  const auto qr = frame.basis().colPivHouseholderQr();
  const Matrix coords = qr.solve(image);
  const double resid = (frame.basis() * coords - image).norm();
  if (resid <= 1e-12 * image.norm()) {
    const double d = std::abs(coords.determinant());
    out.value = d;
    out.log_value = std::log(d);
    out.method = VolumeMethod::closed_form;
    return out;
  }
  const auto run = coupled_ball_volumes({&frame, &image_frame}, options);
  const auto& num = run[0];
  const auto& den = run[1];
  out.value = num.value / den.value;
  out.log_value = std::log(num.value) - std::log(den.value);
  out.std_error_log = std::hypot(num.rel_error(), den.rel_error());
  out.n_samples = num.n_samples;
  out.method = VolumeMethod::monte_carlo;
  out.reached_target = num.reached_target;
  return out;
}

}  // namespace srbvol
