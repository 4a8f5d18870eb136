#pragma once

#include "deepgreen/econ/iv.hpp"
#include "support/dgp.hpp"

namespace dgp {

inline deepgreen::econ::IvData to_iv_data(const IvSample& s) {
  const auto n = static_cast<Eigen::Index>(s.y.size());
  deepgreen::econ::IvData d;
  d.y = Eigen::Map<const Eigen::VectorXd>(s.y.data(), n);
  d.d = Eigen::Map<const Eigen::VectorXd>(s.d.data(), n);
  d.W.resize(n, 2);
  d.W.col(0).setOnes();
  d.W.col(1) = Eigen::Map<const Eigen::VectorXd>(s.w.data(), n);
  d.Z = Eigen::Map<const Eigen::VectorXd>(s.z.data(), n);
  d.d_name = "d";
  d.w_names = {"_cons", "w"};
  d.z_names = {"z"};
  return d;
}

}  // namespace dgp
