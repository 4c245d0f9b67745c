#include "sgr/world_model.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

namespace sgr {

using nlohmann::json;

VectorXd sequence_step(const WorldModel& model, const VectorXd& h_prev,
                       const VectorXd& z_prev, const VectorXd& action) {
  require(h_prev.size() == model.d, "sequence_step: h dimension mismatch");
  require(z_prev.size() == model.k, "sequence_step: z dimension mismatch");
  require(action.size() == model.C.cols(), "sequence_step: action dimension mismatch");
  return model.A * h_prev + model.B * z_prev + model.C * action;
}

GaussianBelief prior(const WorldModel& model, const VectorXd& h) {
  require(h.size() == model.d, "prior: h dimension mismatch");
  GaussianBelief b;
  b.mean = model.prior_weight * h + model.prior_offset;
  b.var = floor_var(model.prior_var);
  return b;
}

GaussianBelief posterior(const WorldModel& model, const VectorXd& h,
                         const ObservationBundle& bundle,
                         const SensorMask& mask) {
  require(mask.size() == bundle.sensor_count(), "posterior: mask length mismatch");
  require(bundle.sensor_count() == model.sensor_count(),
          "posterior: bundle does not match model layout");
  const GaussianBelief pr = prior(model, h);
  VectorXd precision = pr.var.cwiseInverse();
  VectorXd weighted_mean = pr.mean.cwiseProduct(precision);

  int used = 0;
  for (int i = 0; i < bundle.sensor_count(); ++i) {
    const bool masked = mask.is_masked(i);
    if (masked && !model.mask_as_zero_evidence) continue;
    const auto& enc = model.encoders[i];
    VectorXd values = bundle.frames[i].values;
    if (masked) values.setConstant(model.mask_value);
    const VectorXd evidence = enc.weight * values + enc.offset;
    const VectorXd enc_precision = floor_var(enc.noise_var).cwiseInverse();
    precision += enc_precision;
    weighted_mean += evidence.cwiseProduct(enc_precision);
    ++used;
  }
  if (used == 0)
    throw InvalidSubsetError("posterior: all sensors masked");

  GaussianBelief post;
  post.mean = weighted_mean.cwiseQuotient(precision);
  post.var = floor_var(precision.cwiseInverse());
  return post;
}

ObservationBundle decode(const WorldModel& model, const VectorXd& h,
                         const VectorXd& z) {
  require(h.size() == model.d && z.size() == model.k, "decode: dimension mismatch");
  VectorXd hz(model.d + model.k);
  hz << h, z;
  ObservationBundle out;
  out.frames.reserve(model.sensor_count());
  for (int i = 0; i < model.sensor_count(); ++i) {
    const auto& shape = model.layout.shapes[i];
    SensorFrame f;
    f.sensor_id = i;
    f.rows = shape[0];
    f.cols = shape[1];
    f.channels = shape[2];
    f.values = model.decoders[i].weight * hz + model.decoders[i].offset;
    out.frames.push_back(std::move(f));
  }
  return out;
}

double rejection_score(const WorldModel& model, const ObservationBundle& bundle) {
  require(bundle.matches(model.layout), "rejection_score: layout mismatch");
  const SensorMask none = SensorMask::none(bundle.sensor_count());
  const GaussianBelief post = posterior(model, model.h0, bundle, none);
  const ObservationBundle recon = decode(model, model.h0, post.mean);
  double abs_sum = 0.0;
  int count = 0;
  for (int i = 0; i < bundle.sensor_count(); ++i) {
    abs_sum += (bundle.frames[i].values - recon.frames[i].values).cwiseAbs().sum();
    count += static_cast<int>(bundle.frames[i].values.size());
  }
  return abs_sum / count;
}

double predict_reward(const WorldModel& model, const VectorXd& h,
                      const VectorXd& z) {
  require(h.size() == model.d && z.size() == model.k,
          "predict_reward: dimension mismatch");
  VectorXd hz(model.d + model.k);
  hz << h, z;
  return model.reward_weight.dot(hz) + model.reward_offset;
}

// ---------------------------------------------------------------------------
// fitting
// ---------------------------------------------------------------------------

namespace {

struct LinFit {
  MatrixXd W;          // outputs x inputs
  VectorXd b;          // outputs
  VectorXd resid_var;  // outputs
};

// Ridge regression with unpenalized intercept (mean-centered normal equations).
LinFit ridge_fit(const MatrixXd& X, const MatrixXd& Y, double ridge,
                 const std::string& block) {
  const auto n = X.rows();
  if (n < 2) throw FitError("fit: too few samples for block " + block);
  const Eigen::RowVectorXd xm = X.colwise().mean();
  const Eigen::RowVectorXd ym = Y.colwise().mean();
  const MatrixXd Xc = X.rowwise() - xm;
  const MatrixXd Yc = Y.rowwise() - ym;
  MatrixXd gram = Xc.transpose() * Xc;
  gram.diagonal().array() += ridge;
  Eigen::LDLT<MatrixXd> ldlt(gram);
  if (ldlt.info() != Eigen::Success)
    throw FitError("fit: degenerate normal equations in block " + block);
  const MatrixXd Wt = ldlt.solve(Xc.transpose() * Yc);  // inputs x outputs
  if (!Wt.allFinite())
    throw FitError("fit: non-finite solution in block " + block);
  LinFit out;
  out.W = Wt.transpose();
  out.b = (ym - xm * Wt).transpose();
  const MatrixXd resid = Yc - Xc * Wt;
  out.resid_var = resid.array().square().colwise().mean().transpose();
  return out;
}

// RTS smoother over the generating linear system; returns smoothed state
// means for one episode.
std::vector<VectorXd> smooth_episode(const GeneratingSystem& gen,
                                     const SensorLayout& layout,
                                     const EpisodeTrace& ep) {
  const int n = gen.state_dim();
  const int T = ep.length();
  const MatrixXd Q =
      gen.process_std.array().square().max(1e-10).matrix().asDiagonal();

  // stacked measurement
  const int obs_dim = layout.total_dim();
  MatrixXd H(obs_dim, n);
  VectorXd off(obs_dim);
  VectorXd rdiag(obs_dim);
  int pos = 0;
  for (int i = 0; i < gen.sensor_count(); ++i) {
    const int di = static_cast<int>(gen.H[i].rows());
    H.middleRows(pos, di) = gen.H[i];
    off.segment(pos, di) = gen.render_offset[i];
    rdiag.segment(pos, di).setConstant(std::max(gen.obs_std[i] * gen.obs_std[i], 1e-10));
    pos += di;
  }

  std::vector<VectorXd> xf(T), xp(T);
  std::vector<MatrixXd> Pf(T), Pp(T);
  VectorXd x = gen.start_mean;
  MatrixXd P = gen.start_std.array().square().max(1e-10).matrix().asDiagonal();
  for (int t = 0; t < T; ++t) {
    if (t > 0) {
      x = gen.F * x + gen.G * ep.actions[t - 1];
      P = gen.F * P * gen.F.transpose() + Q;
    }
    xp[t] = x;
    Pp[t] = P;
    // measurement update (information-free form via innovation)
    VectorXd y(obs_dim);
    int p2 = 0;
    for (const auto& f : ep.bundles[t].frames) {
      y.segment(p2, f.values.size()) = f.values;
      p2 += static_cast<int>(f.values.size());
    }
    const MatrixXd S = H * P * H.transpose() + MatrixXd(rdiag.asDiagonal());
    const MatrixXd K = S.ldlt().solve(H * P).transpose();
    x = x + K * (y - off - H * x);
    P = P - K * H * P;
    xf[t] = x;
    Pf[t] = P;
  }
  std::vector<VectorXd> xs(T);
  xs[T - 1] = xf[T - 1];
  MatrixXd Ps = Pf[T - 1];
  for (int t = T - 2; t >= 0; --t) {
    const MatrixXd J =
        Pp[t + 1].ldlt().solve(gen.F * Pf[t]).transpose();
    xs[t] = xf[t] + J * (xs[t + 1] - xp[t + 1]);
    Ps = Pf[t] + J * (Ps - Pp[t + 1]) * J.transpose();
  }
  return xs;
}

}  // namespace

WorldModel fit(const TrajectoryStore& store, const DropoutPolicy& dropout,
               FitDims dims, double ridge, std::uint64_t seed) {
  const int n_eps = static_cast<int>(store.episodes.size());
  if (n_eps < 2) throw FitError("fit: need at least 2 episodes");
  for (const auto& ep : store.episodes) {
    if (ep.length() < 3) throw FitError("fit: episodes must have >= 3 steps");
    for (const auto& b : ep.bundles)
      if (!b.matches(store.layout))
        throw ConfigError("fit: bundle does not match declared sensor layout");
  }
  if (ridge <= 0.0) throw FitError("fit: ridge must be > 0");
  const int n = store.gen.state_dim();
  if (dims.d != n || dims.k != n)
    throw ConfigError("fit: analytic latent targets require d = k = state_dim");

  const int holdout = std::max(1, n_eps / 5);
  const int fit_eps = n_eps - holdout;
  const int sensors = store.layout.sensor_count();

  // latent targets from the smoother
  std::vector<std::vector<VectorXd>> zs(n_eps), hs(n_eps);
  for (int e = 0; e < n_eps; ++e) {
    const auto& ep = store.episodes[e];
    zs[e] = smooth_episode(store.gen, store.layout, ep);
    hs[e].resize(ep.length());
    hs[e][0] = store.gen.start_mean;
    for (int t = 1; t < ep.length(); ++t)
      hs[e][t] = store.gen.F * zs[e][t - 1] + store.gen.G * ep.actions[t - 1];
  }

  // dropout masks per (fit episode, step)
  int max_len = 0;
  for (int e = 0; e < fit_eps; ++e)
    max_len = std::max(max_len, store.episodes[e].length());
  std::vector<std::vector<SensorMask>> masks;
  if (dropout.enabled) {
    Rng rng(Rng::derive_seed(seed ^ dropout.seed, {0x5eedu}));
    masks = dropout_masks(sensors, fit_eps, max_len, rng);
  }

  const int a_dim = store.gen.action_dim();
  int total = 0;
  for (int e = 0; e < fit_eps; ++e) total += store.episodes[e].length();

  WorldModel model;
  model.d = n;
  model.k = n;
  model.layout = store.layout;
  model.ridge = ridge;
  model.seed = seed;
  model.mask_value = dropout.mask_value;

  // sequence model
  {
    MatrixXd X(total - fit_eps, 2 * n + a_dim), Y(total - fit_eps, n);
    int r = 0;
    for (int e = 0; e < fit_eps; ++e) {
      const auto& ep = store.episodes[e];
      for (int t = 1; t < ep.length(); ++t, ++r) {
        X.row(r) << hs[e][t - 1].transpose(), zs[e][t - 1].transpose(),
            ep.actions[t - 1].transpose();
        Y.row(r) = hs[e][t].transpose();
      }
    }
    LinFit f = ridge_fit(X, Y, ridge, "sequence");
    model.A = f.W.leftCols(n);
    model.B = f.W.middleCols(n, n);
    model.C = f.W.rightCols(a_dim);
    // the recurrence has no bias term; the fitted intercept is ~0 because the
    // targets are exact linear maps of the inputs
    (void)f.b;
  }

  MatrixXd Xh(total, n), Yz(total, n), Xhz(total, 2 * n);
  VectorXd Yr(total);
  {
    int r = 0;
    for (int e = 0; e < fit_eps; ++e) {
      const auto& ep = store.episodes[e];
      for (int t = 0; t < ep.length(); ++t, ++r) {
        Xh.row(r) = hs[e][t].transpose();
        Yz.row(r) = zs[e][t].transpose();
        Xhz.row(r) << hs[e][t].transpose(), zs[e][t].transpose();
        Yr(r) = ep.rewards[t];
      }
    }
  }

  // prior head
  {
    LinFit f = ridge_fit(Xh, Yz, ridge, "prior");
    model.prior_weight = f.W;
    model.prior_offset = f.b;
    model.prior_var = floor_var(f.resid_var);
  }

  // per-sensor encoders and decoders
  model.encoders.resize(sensors);
  model.decoders.resize(sensors);
  for (int i = 0; i < sensors; ++i) {
    const int di = store.layout.frame_dim(i);
    // encoder: latent target from this sensor's frame, on unmasked steps
    std::vector<int> keep_rows;
    {
      int r = 0;
      for (int e = 0; e < fit_eps; ++e) {
        const auto& ep = store.episodes[e];
        for (int t = 0; t < ep.length(); ++t, ++r) {
          const bool masked = dropout.enabled && masks[e][t].is_masked(i);
          if (!masked) keep_rows.push_back(r);
        }
      }
    }
    MatrixXd Xf(keep_rows.size(), di), Yzk(keep_rows.size(), n);
    {
      int rr = 0;
      int r = 0;
      std::size_t ki = 0;
      for (int e = 0; e < fit_eps; ++e) {
        const auto& ep = store.episodes[e];
        for (int t = 0; t < ep.length(); ++t, ++r) {
          if (ki < keep_rows.size() && keep_rows[ki] == r) {
            Xf.row(rr) = ep.bundles[t].frames[i].values.transpose();
            Yzk.row(rr) = zs[e][t].transpose();
            ++rr;
            ++ki;
          }
        }
      }
      (void)rr;
    }
    LinFit ef = ridge_fit(Xf, Yzk, ridge, "encoder[" + std::to_string(i) + "]");
    model.encoders[i] = {ef.W, ef.b, floor_var(ef.resid_var)};

    // decoder: frame from (h, z) on all fit steps
    MatrixXd Yf(total, di);
    {
      int r = 0;
      for (int e = 0; e < fit_eps; ++e) {
        const auto& ep = store.episodes[e];
        for (int t = 0; t < ep.length(); ++t, ++r)
          Yf.row(r) = ep.bundles[t].frames[i].values.transpose();
      }
    }
    LinFit df = ridge_fit(Xhz, Yf, ridge, "decoder[" + std::to_string(i) + "]");
    model.decoders[i] = {df.W, df.b};
  }

  // reward head
  {
    LinFit f = ridge_fit(Xhz, Yr, ridge, "reward");
    model.reward_weight = f.W.row(0).transpose();
    model.reward_offset = f.b(0);
  }

  model.h0 = store.gen.start_mean;

  // calibration on held-out clean steps
  {
    double sum = 0.0, sq = 0.0;
    int count = 0;
    for (int e = fit_eps; e < n_eps; ++e) {
      for (const auto& b : store.episodes[e].bundles) {
        const double s = rejection_score(model, b);
        sum += s;
        sq += s * s;
        ++count;
      }
    }
    if (count < 2) throw FitError("fit: not enough held-out steps for calibration");
    const double mean = sum / count;
    const double var = std::max(0.0, sq / count - mean * mean);
    model.calib = {mean, std::sqrt(var), count};
  }

  return model;
}

// ---------------------------------------------------------------------------
// serialization
// ---------------------------------------------------------------------------

namespace {

json mat_to_json(const MatrixXd& m) {
  json rows = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

MatrixXd mat_from_json(const json& j) {
  const int rows = static_cast<int>(j.size());
  const int cols = rows == 0 ? 0 : static_cast<int>(j[0].size());
  MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  return m;
}

json vec_to_json(const VectorXd& v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

VectorXd vec_from_json(const json& j) {
  VectorXd v(j.size());
  for (int i = 0; i < static_cast<int>(j.size()); ++i) v(i) = j[i].get<double>();
  return v;
}

}  // namespace

std::string model_to_json(const WorldModel& m) {
  json j;
  j["d"] = m.d;
  j["k"] = m.k;
  json shapes = json::array();
  for (const auto& s : m.layout.shapes) shapes.push_back({s[0], s[1], s[2]});
  j["layout"] = shapes;
  j["A"] = mat_to_json(m.A);
  j["B"] = mat_to_json(m.B);
  j["C"] = mat_to_json(m.C);
  j["prior_weight"] = mat_to_json(m.prior_weight);
  j["prior_offset"] = vec_to_json(m.prior_offset);
  j["prior_var"] = vec_to_json(m.prior_var);
  json encs = json::array();
  for (const auto& e : m.encoders)
    encs.push_back({{"weight", mat_to_json(e.weight)},
                    {"offset", vec_to_json(e.offset)},
                    {"noise_var", vec_to_json(e.noise_var)}});
  j["encoders"] = encs;
  json decs = json::array();
  for (const auto& d : m.decoders)
    decs.push_back({{"weight", mat_to_json(d.weight)},
                    {"offset", vec_to_json(d.offset)}});
  j["decoders"] = decs;
  j["reward_weight"] = vec_to_json(m.reward_weight);
  j["reward_offset"] = m.reward_offset;
  j["h0"] = vec_to_json(m.h0);
  j["calib"] = {{"recon_mean", m.calib.recon_mean},
                {"recon_std", m.calib.recon_std},
                {"n_samples", m.calib.n_samples}};
  j["mask_as_zero_evidence"] = m.mask_as_zero_evidence;
  j["mask_value"] = m.mask_value;
  j["ridge"] = m.ridge;
  j["seed"] = m.seed;
  return j.dump(2);
}

WorldModel model_from_json(const std::string& text) {
  json j = json::parse(text);
  WorldModel m;
  m.d = j["d"].get<int>();
  m.k = j["k"].get<int>();
  for (const auto& s : j["layout"])
    m.layout.shapes.push_back({s[0].get<int>(), s[1].get<int>(), s[2].get<int>()});
  m.A = mat_from_json(j["A"]);
  m.B = mat_from_json(j["B"]);
  m.C = mat_from_json(j["C"]);
  m.prior_weight = mat_from_json(j["prior_weight"]);
  m.prior_offset = vec_from_json(j["prior_offset"]);
  m.prior_var = vec_from_json(j["prior_var"]);
  for (const auto& e : j["encoders"])
    m.encoders.push_back({mat_from_json(e["weight"]), vec_from_json(e["offset"]),
                          vec_from_json(e["noise_var"])});
  for (const auto& d : j["decoders"])
    m.decoders.push_back({mat_from_json(d["weight"]), vec_from_json(d["offset"])});
  m.reward_weight = vec_from_json(j["reward_weight"]);
  m.reward_offset = j["reward_offset"].get<double>();
  m.h0 = vec_from_json(j["h0"]);
  m.calib = {j["calib"]["recon_mean"].get<double>(),
             j["calib"]["recon_std"].get<double>(),
             j["calib"]["n_samples"].get<int>()};
  m.mask_as_zero_evidence = j["mask_as_zero_evidence"].get<bool>();
  m.mask_value = j["mask_value"].get<double>();
  m.ridge = j["ridge"].get<double>();
  m.seed = j["seed"].get<std::uint64_t>();
  return m;
}

}  // namespace sgr
