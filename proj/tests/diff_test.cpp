#include <gtest/gtest.h>

#include "mlpcpg/cpg_grad.hpp"
#include "mlpcpg/finite_diff.hpp"
#include "mlpcpg/mlp.hpp"
#include "mlpcpg/rng.hpp"

using namespace mlpcpg;

namespace {

// Pack (state, fb, eps, phi) into one vector so cpg_step can be finite-
// differenced as a plain R^349 -> R^36 map.
constexpr int kStateDim = 24, kFbDim = 37, kParamDim = 288;
constexpr int kInDim = kStateDim + kFbDim + kParamDim;

VecX pack(const CpgState& s, const FeedbackSignals& fb, const CpgParams& p) {
  VecX x(kInDim);
  x.segment<12>(0) = s.theta;
  x.segment<12>(12) = s.r;
  x[24] = fb.f;
  x.segment<12>(25) = fb.kappa;
  x.segment<12>(37) = fb.xi;
  x.segment<12>(49) = fb.chi;
  for (int i = 0; i < 12; ++i)
    for (int j = 0; j < 12; ++j) {
      x[61 + i * 12 + j] = p.eps(i, j);
      x[61 + 144 + i * 12 + j] = p.phi(i, j);
    }
  return x;
}

void unpack(const VecX& x, CpgState& s, FeedbackSignals& fb, CpgParams& p) {
  s.theta = x.segment<12>(0);
  s.r = x.segment<12>(12);
  fb.f = x[24];
  fb.kappa = x.segment<12>(25);
  fb.xi = x.segment<12>(37);
  fb.chi = x.segment<12>(49);
  for (int i = 0; i < 12; ++i)
    for (int j = 0; j < 12; ++j) {
      p.eps(i, j) = i == j ? 0.0 : x[61 + i * 12 + j];
      p.phi(i, j) = x[61 + 144 + i * 12 + j];
    }
}

VecX eval_step(const VecX& x, const CpgParams& base) {
  CpgState s;
  FeedbackSignals fb;
  CpgParams p = base;
  unpack(x, s, fb, p);
  const CpgOutput out = cpg_step(s, p, fb);
  VecX y(36);
  y.segment<12>(0) = out.new_state.theta;
  y.segment<12>(12) = out.new_state.r;
  y.segment<12>(24) = out.psi;
  return y;
}

MatX analytic_jacobian(const CpgState& s, const CpgParams& p, const FeedbackSignals& fb) {
  const StepJacobians jac = cpg_step_jacobians(s, p, fb);
  MatX full(36, kInDim);
  full.block(0, 0, 36, 24) = jac.d_out_d_state;
  full.block(0, 24, 36, 37) = jac.d_out_d_fb;
  full.block(0, 61, 36, 288) = jac.d_out_d_params;
  // FD perturbs the raw eps entries but the diagonal is masked to zero in
  // unpack, so zero those columns in the numeric side instead; here nothing
  // to do for analytic (diagonal grads are identically zero).
  return full;
}

void random_config(Rng& rng, CpgState& s, CpgParams& p, FeedbackSignals& fb,
                   int flavor) {
  p = default_cpg_params();
  for (int i = 0; i < 12; ++i) {
    s.theta[i] = rng.uniform(-10.0, 10.0);
    s.r[i] = rng.uniform(0.05, 1.5);
    fb.kappa[i] = rng.uniform(-0.9, 0.9);
    fb.xi[i] = rng.uniform(-kTwoPi, kTwoPi);
    fb.chi[i] = rng.uniform(-0.5, 0.5);
    for (int j = 0; j < 12; ++j)
      if (i != j) {
        p.eps(i, j) = rng.uniform(-4.0, 4.0);
        p.phi(i, j) = rng.uniform(-kPi, kPi);
      }
  }
  fb.f = rng.uniform(0.0, 3.0);
  switch (flavor % 4) {
    case 1:  // amplitudes near zero (away from the floor gate's kink)
      s.r.setConstant(1e-3);
      fb.kappa.setConstant(0.5);
      break;
    case 2:  // phases near the wrap point
      s.theta.setConstant(kTwoPi - 1e-4);
      break;
    case 3:  // kappa at its bounds
      for (int i = 0; i < 12; ++i) fb.kappa[i] = (i % 2 == 0) ? 1.0 : -1.0;
      break;
    default:
      break;
  }
}

}  // namespace

TEST(FiniteDiff, IdentityFunction) {
  auto id = [](const VecX& x) { return x; };
  // power-of-two points and step keep x +/- h exactly representable
  VecX p(5);
  p << 0.5, -0.25, 1.0, 0.125, -2.0;
  const MatX jac = finite_diff_jacobian(id, p, 0x1.0p-20);
  EXPECT_LT((jac - MatX::Identity(5, 5)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(FiniteDiff, Square) {
  auto sq = [](const VecX& x) { return VecX(x.array().square()); };
  VecX p(1);
  p[0] = 3.0;
  const MatX jac = finite_diff_jacobian(sq, p, 1e-5);
  EXPECT_NEAR(jac(0, 0), 6.0, 1e-8);
}

TEST(FiniteDiff, RejectsBadStep) {
  auto id = [](const VecX& x) { return x; };
  EXPECT_THROW(finite_diff_jacobian(id, VecX::Zero(2), 0.0), DomainError);
}

TEST(GradCheck, EqualInputs) {
  const MatX a = MatX::Random(3, 4);
  const GradCheckReport rep = grad_check(a, a, 1e-6, 1e-12);
  EXPECT_TRUE(rep.passed);
  EXPECT_DOUBLE_EQ(rep.max_abs_err, 0.0);
  EXPECT_DOUBLE_EQ(rep.max_rel_err, 0.0);
}

TEST(GradCheck, SmallRelativeErrorPasses) {
  MatX a(1, 1), n(1, 1);
  a << 1.0;
  n << 1.0000002;
  EXPECT_TRUE(grad_check(a, n, 1e-5, 1e-12).passed);
}

TEST(GradCheck, LargeErrorFailsWithWorstCoordinate) {
  MatX a = MatX::Ones(2, 2), n = MatX::Ones(2, 2);
  n(1, 0) = 1.1;
  const GradCheckReport rep = grad_check(a, n, 1e-5, 1e-12);
  EXPECT_FALSE(rep.passed);
  EXPECT_EQ(rep.worst_row, 1);
  EXPECT_EQ(rep.worst_col, 0);
  EXPECT_EQ(rep.worst_coordinate(), "(1,0)");
}

TEST(GradCheck, ShapeMismatchRejected) {
  EXPECT_THROW(grad_check(MatX(MatX::Zero(2, 2)), MatX(MatX::Zero(2, 3)), 1e-5, 1e-9), DomainError);
}

TEST(CpgBackward, FrequencyDerivativeIsTwoPiDt) {
  CpgParams p = default_cpg_params();
  Rng rng(3);
  CpgState s;
  FeedbackSignals fb;
  random_config(rng, s, p, fb, 0);
  const StepJacobians jac = cpg_step_jacobians(s, p, fb);
  for (int i = 0; i < 12; ++i) EXPECT_NEAR(jac.d_out_d_fb(i, 0), kTwoPi * p.dt, 1e-14);
}

TEST(CpgBackward, AmplitudeKappaDerivative) {
  // d r' / d kappa_i = gamma * r * 2 (eta + kappa) * dt = 12*0.8*1.6*0.04
  CpgParams p = default_cpg_params();
  p.eta.setConstant(0.8);
  CpgState s;
  s.r.setConstant(0.8);
  FeedbackSignals fb;
  const StepJacobians jac = cpg_step_jacobians(s, p, fb);
  for (int i = 0; i < 12; ++i)
    EXPECT_NEAR(jac.d_out_d_fb(12 + i, 1 + i), 0.6144, 1e-12);
}

TEST(CpgBackward, ZeroUpstreamGivesZeroGrads) {
  CpgParams p = default_cpg_params();
  Rng rng(5);
  CpgState s;
  FeedbackSignals fb;
  random_config(rng, s, p, fb, 0);
  const CpgStepGrads g = cpg_step_backward(s, p, fb, CpgUpstream{});
  EXPECT_DOUBLE_EQ(g.d_f, 0.0);
  EXPECT_DOUBLE_EQ(g.d_theta.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_DOUBLE_EQ(g.d_r.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_DOUBLE_EQ(g.d_eps.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_DOUBLE_EQ(g.d_phi.cwiseAbs().maxCoeff(), 0.0);
}

TEST(CpgBackward, VjpLinearity) {
  CpgParams p = default_cpg_params();
  Rng rng(11);
  CpgState s;
  FeedbackSignals fb;
  random_config(rng, s, p, fb, 0);
  CpgUpstream u, v, combo;
  for (int i = 0; i < 12; ++i) {
    u.d_new_theta[i] = rng.normal();
    u.d_new_r[i] = rng.normal();
    u.d_psi[i] = rng.normal();
    v.d_new_theta[i] = rng.normal();
    v.d_new_r[i] = rng.normal();
    v.d_psi[i] = rng.normal();
  }
  const double a = 1.7, b = -0.4;
  combo.d_new_theta = a * u.d_new_theta + b * v.d_new_theta;
  combo.d_new_r = a * u.d_new_r + b * v.d_new_r;
  combo.d_psi = a * u.d_psi + b * v.d_psi;
  const CpgStepGrads gu = cpg_step_backward(s, p, fb, u);
  const CpgStepGrads gv = cpg_step_backward(s, p, fb, v);
  const CpgStepGrads gc = cpg_step_backward(s, p, fb, combo);
  EXPECT_NEAR(gc.d_f, a * gu.d_f + b * gv.d_f, 1e-12 * std::abs(gc.d_f) + 1e-13);
  EXPECT_LT((gc.d_theta - (a * gu.d_theta + b * gv.d_theta)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((gc.d_eps - (a * gu.d_eps + b * gv.d_eps)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((gc.d_kappa - (a * gu.d_kappa + b * gv.d_kappa)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(CpgBackward, MatchesFiniteDifferences) {
  Rng rng(42);
  for (int config = 0; config < 25; ++config) {
    CpgParams p;
    CpgState s;
    FeedbackSignals fb;
    random_config(rng, s, p, fb, config);
    const VecX x0 = pack(s, fb, p);
    const CpgParams base = p;
    const MatX numeric = finite_diff_jacobian(
        [&](const VecX& x) { return eval_step(x, base); }, x0, 1e-6);
    MatX analytic = analytic_jacobian(s, p, fb);
    // unpack() masks the eps diagonal, so the numeric diagonal columns are
    // zero; the analytic ones already are.
    const GradCheckReport rep = grad_check(analytic, numeric, 1e-5, 1e-7);
    EXPECT_TRUE(rep.passed) << "config " << config << " worst "
                            << rep.worst_coordinate() << " rel "
                            << rep.max_rel_err;
  }
}

TEST(MlpBackward, MatchesFiniteDifferencesOnSampledCoordinates) {
  Rng rng(77);
  MlpParams mlp;
  mlp.init(rng);
  // make the head raw outputs non-trivially scaled
  mlp.net.w3() *= 50.0;
  VecX obs(kObsDim);
  for (int i = 0; i < kObsDim; ++i) obs[i] = rng.normal();

  FeedbackSignals up_fb;
  Vec12 up_sigma;
  up_fb.f = rng.normal();
  for (int i = 0; i < 12; ++i) {
    up_fb.kappa[i] = rng.normal();
    up_fb.xi[i] = rng.normal();
    up_fb.chi[i] = rng.normal();
    up_sigma[i] = rng.normal();
  }

  auto scalar_out = [&](const MlpParams& params, const VecX& o) {
    const FeedbackHead h = mlp_forward(params, o);
    double acc = up_fb.f * h.fb.f;
    for (int i = 0; i < 12; ++i) {
      acc += up_fb.kappa[i] * h.fb.kappa[i] + up_fb.xi[i] * h.fb.xi[i] +
             up_fb.chi[i] * h.fb.chi[i] + up_sigma[i] * h.sigma[i];
    }
    return acc;
  };

  VecX d_obs;
  const VecX grad = mlp_backward(mlp, obs, up_fb, up_sigma, &d_obs);

  // full FD over the observation input
  const double h = 1e-6;
  for (int i = 0; i < kObsDim; ++i) {
    VecX o = obs;
    o[i] = obs[i] + h;
    const double fp = scalar_out(mlp, o);
    o[i] = obs[i] - h;
    const double fm = scalar_out(mlp, o);
    const double num = (fp - fm) / (2 * h);
    EXPECT_NEAR(d_obs[i], num, 1e-5 * std::max(1.0, std::abs(num)));
  }
  // FD over 300 sampled parameter coordinates
  MlpParams work = mlp;
  for (int k = 0; k < 300; ++k) {
    const auto idx = static_cast<Eigen::Index>(rng.index(work.net.flat().size()));
    const double orig = work.net.flat()[idx];
    work.net.flat()[idx] = orig + h;
    const double fp = scalar_out(work, obs);
    work.net.flat()[idx] = orig - h;
    const double fm = scalar_out(work, obs);
    work.net.flat()[idx] = orig;
    const double num = (fp - fm) / (2 * h);
    EXPECT_NEAR(grad[idx], num, 1e-5 * std::max(1.0, std::abs(num))) << "idx " << idx;
  }
}

TEST(MlpBackward, ZeroUpstreamGivesZeroGrads) {
  Rng rng(9);
  MlpParams mlp;
  mlp.init(rng);
  VecX obs = VecX::Zero(kObsDim);
  const VecX grad = mlp_backward(mlp, obs, FeedbackSignals{}, Vec12(Vec12::Zero()));
  EXPECT_DOUBLE_EQ(grad.cwiseAbs().maxCoeff(), 0.0);
}

TEST(MlpBackward, LastLayerGradIsOuterProduct) {
  Rng rng(10);
  DenseNet net(4, 3, 2);
  net.init(rng, 1.0);
  MatX x = MatX::Random(4, 1);
  DenseNet::Cache cache;
  net.forward(x, &cache);
  MatX dy = MatX::Random(2, 1);
  VecX grad = VecX::Zero(net.flat().size());
  net.backward(cache, dy, &grad);
  // w3 rows live at the tail of the flat vector: grad(w3) = dy * h2^T
  DenseNet view(4, 3, 2);
  view.flat() = grad;
  const MatX expected = dy * cache.h2.transpose();
  EXPECT_LT((view.w3() - expected).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((view.b3() - dy.col(0)).cwiseAbs().maxCoeff(), 1e-14);
}
