#include "pfa/pnp.hpp"

#include <array>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "pfa/error.hpp"

namespace pfa {

namespace {

using Mat12 = Eigen::Matrix<double, 12, 12>;
using Vec12 = Eigen::Matrix<double, 12, 1>;
using Mat6x10 = Eigen::Matrix<double, 6, 10>;
using Vec4 = Eigen::Vector4d;

Mat3 skew(const Vec3& v) {
  Mat3 s;
  s << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return s;
}

void require_solvable(std::span<const Correspondence> c) {
  if (c.size() < 4) {
    throw Error(ErrorCode::kSolver, "PnP needs at least 4 correspondences, got " + std::to_string(c.size()));
  }
  for (const auto& x : c) {
    if (!x.p.allFinite() || !x.u.allFinite()) throw Error(ErrorCode::kInvalidInput, "non-finite correspondence");
  }
  const SpreadRatios s = spread_ratios(c);
  if (s.line < kDegenerateSpread) throw Error(ErrorCode::kSolver, "degenerate PnP input: points are collinear");
  if (s.plane < kDegenerateSpread) throw Error(ErrorCode::kSolver, "degenerate PnP input: points are coplanar");
}

// Rigid alignment of world points onto camera points.
RigidPose procrustes(std::span<const Correspondence> c, const std::vector<Vec3>& pcs) {
  Vec3 pw0 = Vec3::Zero();
  Vec3 pc0 = Vec3::Zero();
  for (std::size_t i = 0; i < c.size(); ++i) {
    pw0 += c[i].p;
    pc0 += pcs[i];
  }
  pw0 /= static_cast<double>(c.size());
  pc0 /= static_cast<double>(c.size());
  Mat3 h = Mat3::Zero();
  for (std::size_t i = 0; i < c.size(); ++i) h += (pcs[i] - pc0) * (c[i].p - pw0).transpose();
  Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) d(2, 2) = -1.0;
  RigidPose pose;
  pose.rotation = svd.matrixU() * d * svd.matrixV().transpose();
  pose.translation = pc0 - pose.rotation * pw0;
  return pose;
}

class Epnp {
 public:
  Epnp(std::span<const Correspondence> c, const CameraIntrinsics& K) : c_(c), K_(K) {
    choose_control_points();
    compute_alphas();
  }

  RigidPose solve() {
    Mat12 mtm = Mat12::Zero();
    for (std::size_t i = 0; i < c_.size(); ++i) {
      Eigen::Matrix<double, 2, 12> m = Eigen::Matrix<double, 2, 12>::Zero();
      for (int j = 0; j < 4; ++j) {
        const double a = alphas_[i][j];
        m(0, 3 * j) = a * K_.fx;
        m(0, 3 * j + 2) = a * (K_.cx - c_[i].u.x());
        m(1, 3 * j + 1) = a * K_.fy;
        m(1, 3 * j + 2) = a * (K_.cy - c_[i].u.y());
      }
      mtm.noalias() += m.transpose() * m;
    }
    Eigen::SelfAdjointEigenSolver<Mat12> eig(mtm);
    std::array<Vec12, 4> v;
    for (int k = 0; k < 4; ++k) v[k] = eig.eigenvectors().col(k);

    const Mat6x10 L = compute_l(v);
    Eigen::Matrix<double, 6, 1> rho;
    static constexpr int kPairs[6][2] = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
    for (int r = 0; r < 6; ++r) rho(r) = (cws_[kPairs[r][0]] - cws_[kPairs[r][1]]).squaredNorm();

    RigidPose best;
    double best_err = std::numeric_limits<double>::infinity();
    for (int approx = 1; approx <= 3; ++approx) {
      Vec4 betas = initial_betas(approx, L, rho);
      gauss_newton_betas(L, rho, betas);
      RigidPose pose;
      if (!pose_from_betas(v, betas, pose)) continue;
      const double err = reprojection_cost(pose, c_, K_);
      if (err < best_err) {
        best_err = err;
        best = pose;
      }
    }
    if (!std::isfinite(best_err)) throw Error(ErrorCode::kSolver, "EPnP produced no valid pose");
    return best;
  }

 private:
  void choose_control_points() {
    Vec3 c0 = Vec3::Zero();
    for (const auto& x : c_) c0 += x.p;
    c0 /= static_cast<double>(c_.size());
    Mat3 cov = Mat3::Zero();
    for (const auto& x : c_) cov += (x.p - c0) * (x.p - c0).transpose();
    Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
    cws_[0] = c0;
    const double n = static_cast<double>(c_.size());
    for (int i = 0; i < 3; ++i) {
      const int k = 2 - i;  // descending eigenvalues
      cws_[i + 1] = c0 + std::sqrt(eig.eigenvalues()(k) / n) * eig.eigenvectors().col(k);
    }
  }

  void compute_alphas() {
    Mat3 cc;
    for (int i = 0; i < 3; ++i) cc.col(i) = cws_[i + 1] - cws_[0];
    const Mat3 inv = cc.inverse();
    alphas_.resize(c_.size());
    for (std::size_t i = 0; i < c_.size(); ++i) {
      const Vec3 a = inv * (c_[i].p - cws_[0]);
      alphas_[i] = {1.0 - a.sum(), a.x(), a.y(), a.z()};
    }
  }

  static Mat6x10 compute_l(const std::array<Vec12, 4>& v) {
    static constexpr int kPairs[6][2] = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
    Mat6x10 L;
    for (int r = 0; r < 6; ++r) {
      std::array<Vec3, 4> dv;
      for (int i = 0; i < 4; ++i) {
        dv[i] = v[i].segment<3>(3 * kPairs[r][0]) - v[i].segment<3>(3 * kPairs[r][1]);
      }
      L(r, 0) = dv[0].dot(dv[0]);
      L(r, 1) = 2.0 * dv[0].dot(dv[1]);
      L(r, 2) = dv[1].dot(dv[1]);
      L(r, 3) = 2.0 * dv[0].dot(dv[2]);
      L(r, 4) = 2.0 * dv[1].dot(dv[2]);
      L(r, 5) = dv[2].dot(dv[2]);
      L(r, 6) = 2.0 * dv[0].dot(dv[3]);
      L(r, 7) = 2.0 * dv[1].dot(dv[3]);
      L(r, 8) = 2.0 * dv[2].dot(dv[3]);
      L(r, 9) = dv[3].dot(dv[3]);
    }
    return L;
  }

  template <int Cols>
  static Eigen::Matrix<double, Cols, 1> least_squares(const Mat6x10& L, const std::array<int, Cols>& cols,
                                                       const Eigen::Matrix<double, 6, 1>& rho) {
    Eigen::Matrix<double, 6, Cols> a;
    for (int i = 0; i < Cols; ++i) a.col(i) = L.col(cols[i]);
    return a.jacobiSvd(Eigen::ComputeFullU | Eigen::ComputeFullV).solve(rho);
  }

  static Vec4 initial_betas(int approx, const Mat6x10& L, const Eigen::Matrix<double, 6, 1>& rho) {
    Vec4 betas = Vec4::Zero();
    if (approx == 1) {
      const auto b = least_squares<4>(L, {0, 1, 3, 6}, rho);
      const double sign = b(0) < 0.0 ? -1.0 : 1.0;
      betas(0) = std::sqrt(std::abs(b(0)));
      if (betas(0) > 0.0) betas.tail<3>() = sign * Eigen::Vector3d(b(1), b(2), b(3)) / betas(0);
    } else if (approx == 2) {
      const auto b = least_squares<3>(L, {0, 1, 2}, rho);
      if (b(0) < 0.0) {
        betas(0) = std::sqrt(-b(0));
        betas(1) = b(2) < 0.0 ? std::sqrt(-b(2)) : 0.0;
      } else {
        betas(0) = std::sqrt(b(0));
        betas(1) = b(2) > 0.0 ? std::sqrt(b(2)) : 0.0;
      }
      if (b(1) < 0.0) betas(0) = -betas(0);
    } else {
      const auto b = least_squares<5>(L, {0, 1, 2, 3, 4}, rho);
      if (b(0) < 0.0) {
        betas(0) = std::sqrt(-b(0));
        betas(1) = b(2) < 0.0 ? std::sqrt(-b(2)) : 0.0;
      } else {
        betas(0) = std::sqrt(b(0));
        betas(1) = b(2) > 0.0 ? std::sqrt(b(2)) : 0.0;
      }
      if (b(1) < 0.0) betas(0) = -betas(0);
      betas(2) = betas(0) != 0.0 ? b(3) / betas(0) : 0.0;
    }
    return betas;
  }

  static void gauss_newton_betas(const Mat6x10& L, const Eigen::Matrix<double, 6, 1>& rho, Vec4& b) {
    for (int iter = 0; iter < 5; ++iter) {
      Eigen::Matrix<double, 6, 4> a;
      Eigen::Matrix<double, 6, 1> r;
      for (int i = 0; i < 6; ++i) {
        const auto l = L.row(i);
        a(i, 0) = 2 * l(0) * b(0) + l(1) * b(1) + l(3) * b(2) + l(6) * b(3);
        a(i, 1) = l(1) * b(0) + 2 * l(2) * b(1) + l(4) * b(2) + l(7) * b(3);
        a(i, 2) = l(3) * b(0) + l(4) * b(1) + 2 * l(5) * b(2) + l(8) * b(3);
        a(i, 3) = l(6) * b(0) + l(7) * b(1) + l(8) * b(2) + 2 * l(9) * b(3);
        r(i) = rho(i) - (l(0) * b(0) * b(0) + l(1) * b(0) * b(1) + l(2) * b(1) * b(1) + l(3) * b(0) * b(2) +
                         l(4) * b(1) * b(2) + l(5) * b(2) * b(2) + l(6) * b(0) * b(3) + l(7) * b(1) * b(3) +
                         l(8) * b(2) * b(3) + l(9) * b(3) * b(3));
      }
      const Vec4 dx = a.colPivHouseholderQr().solve(r);
      if (!dx.allFinite()) return;
      b += dx;
    }
  }

  bool pose_from_betas(const std::array<Vec12, 4>& v, const Vec4& betas, RigidPose& pose) const {
    Vec12 ccs = Vec12::Zero();
    for (int i = 0; i < 4; ++i) ccs += betas(i) * v[i];
    std::vector<Vec3> pcs(c_.size());
    for (std::size_t i = 0; i < c_.size(); ++i) {
      pcs[i] = Vec3::Zero();
      for (int j = 0; j < 4; ++j) pcs[i] += alphas_[i][j] * ccs.segment<3>(3 * j);
    }
    if (pcs[0].z() < 0.0) {
      for (auto& p : pcs) p = -p;
    }
    for (const auto& p : pcs) {
      if (!p.allFinite()) return false;
    }
    pose = procrustes(c_, pcs);
    return pose.rotation.allFinite() && pose.translation.allFinite();
  }

  std::span<const Correspondence> c_;
  CameraIntrinsics K_;
  std::array<Vec3, 4> cws_;
  std::vector<std::array<double, 4>> alphas_;
};

}  // namespace

RigidPose apply_increment(const RigidPose& pose, const Vec6& delta) {
  RigidPose out;
  out.rotation = exp_so3(delta.head<3>()) * pose.rotation;
  out.translation = pose.translation + delta.tail<3>();
  return out;
}

Vec2 reprojection_residual(const RigidPose& pose, const Correspondence& c, const CameraIntrinsics& K) {
  return project(K, pose, c.p) - c.u;
}

Jacobian26 reprojection_jacobian(const RigidPose& pose, const Vec3& p, const CameraIntrinsics& K) {
  const Vec3 rp = pose.rotation * p;
  const Vec3 x = rp + pose.translation;
  if (!(x.z() > 0.0)) throw Error(ErrorCode::kBehindCamera, "Jacobian at a point behind the camera");
  const double iz = 1.0 / x.z();
  Eigen::Matrix<double, 2, 3> dpi;
  dpi << K.fx * iz, 0.0, -K.fx * x.x() * iz * iz, 0.0, K.fy * iz, -K.fy * x.y() * iz * iz;
  Jacobian26 j;
  j.leftCols<3>() = -dpi * skew(rp);
  j.rightCols<3>() = dpi;
  return j;
}

double reprojection_cost(const RigidPose& pose, std::span<const Correspondence> c, const CameraIntrinsics& K) {
  double cost = 0.0;
  for (const auto& x : c) {
    const Vec3 cam = pose.transform(x.p);
    if (!(cam.z() > 0.0)) return std::numeric_limits<double>::infinity();
    cost += (project_camera(K, cam) - x.u).squaredNorm();
  }
  return cost;
}

SpreadRatios spread_ratios(std::span<const Correspondence> c) {
  if (c.empty()) return {};
  Vec3 mean = Vec3::Zero();
  for (const auto& x : c) mean += x.p;
  mean /= static_cast<double>(c.size());
  Mat3 cov = Mat3::Zero();
  for (const auto& x : c) cov += (x.p - mean) * (x.p - mean).transpose();
  const Vec3 ev = Eigen::SelfAdjointEigenSolver<Mat3>(cov, Eigen::EigenvaluesOnly).eigenvalues();
  if (!(ev(2) > 0.0)) return {};
  return {std::sqrt(std::max(ev(1), 0.0) / ev(2)), std::sqrt(std::max(ev(0), 0.0) / ev(2))};
}

RigidPose epnp(std::span<const Correspondence> c, const CameraIntrinsics& K) {
  require_solvable(c);
  return Epnp(c, K).solve();
}

GaussNewtonResult refine_gauss_newton(const RigidPose& initial, std::span<const Correspondence> c,
                                      const CameraIntrinsics& K, const GaussNewtonOptions& options) {
  GaussNewtonResult result;
  result.pose = initial;
  double cost = reprojection_cost(initial, c, K);
  result.cost_history.push_back(cost);
  if (!std::isfinite(cost)) throw Error(ErrorCode::kSolver, "initial pose places points behind the camera");
  double lambda = 1e-6;
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    Eigen::Matrix<double, 6, 6> jtj = Eigen::Matrix<double, 6, 6>::Zero();
    Vec6 jtr = Vec6::Zero();
    for (const auto& x : c) {
      const Jacobian26 j = reprojection_jacobian(result.pose, x.p, K);
      const Vec2 r = reprojection_residual(result.pose, x, K);
      jtj.noalias() += j.transpose() * j;
      jtr.noalias() += j.transpose() * r;
    }
    result.iterations = iter + 1;
    bool accepted = false;
    Vec6 delta = Vec6::Zero();
    // Levenberg-style damping: shrink the step until the cost does not grow.
    while (lambda < 1e12) {
      Eigen::Matrix<double, 6, 6> a = jtj;
      a.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-12);
      delta = a.ldlt().solve(-jtr);
      if (!delta.allFinite()) {
        lambda *= 10.0;
        continue;
      }
      const RigidPose candidate = apply_increment(result.pose, delta);
      const double next = reprojection_cost(candidate, c, K);
      if (next <= cost) {
        result.pose = candidate;
        cost = next;
        result.cost_history.push_back(cost);
        lambda = std::max(lambda * 0.1, 1e-12);
        accepted = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!accepted || delta.norm() < options.min_step) {
      result.converged = true;
      break;
    }
  }
  return result;
}

RigidPose solve_pnp(std::span<const Correspondence> c, const CameraIntrinsics& K) {
  const RigidPose initial = epnp(c, K);
  return refine_gauss_newton(initial, c, K).pose;
}

}  // namespace pfa
