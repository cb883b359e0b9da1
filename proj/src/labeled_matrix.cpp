#include "decodekit/labeled_matrix.hpp"

#include "decodekit/errors.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

namespace decodekit {

void validate_matrix(std::span<const std::string> ids, const Matrix& values) {
  if (values.rows() < 1) throw ValidationError("matrix has no rows");
  if (values.cols() < 1) throw ValidationError("matrix has no columns");
  if (static_cast<Eigen::Index>(ids.size()) != values.rows()) {
    throw ValidationError("matrix has " + std::to_string(values.rows()) + " rows but " +
                          std::to_string(ids.size()) + " stimulus ids");
  }
  std::unordered_set<std::string_view> seen;
  for (const auto& id : ids) {
    if (id.empty()) throw ValidationError("empty stimulus id");
    if (!seen.insert(id).second) throw ValidationError("duplicate stimulus id '" + id + "'");
  }
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      if (!std::isfinite(values(r, c))) {
        throw ValidationError("non-finite value at row " + std::to_string(r + 1) + ", column " +
                              std::to_string(c + 1) + " (stimulus '" + ids[r] + "')");
      }
    }
  }
}

LabeledMatrix::LabeledMatrix(std::vector<std::string> stimulus_ids, Matrix values) {
  validate_matrix(stimulus_ids, values);
  ids_ = std::make_shared<const std::vector<std::string>>(std::move(stimulus_ids));
  values_ = std::make_shared<const Matrix>(std::move(values));
}

Eigen::Index LabeledMatrix::find(const std::string& id) const {
  auto it = std::find(ids_->begin(), ids_->end(), id);
  return it == ids_->end() ? -1 : static_cast<Eigen::Index>(it - ids_->begin());
}

bool operator==(const LabeledMatrix& a, const LabeledMatrix& b) {
  return a.stimulus_ids() == b.stimulus_ids() && a.values().rows() == b.values().rows() &&
         a.values().cols() == b.values().cols() && a.values() == b.values();
}

LabeledMatrix align(const LabeledMatrix& m, std::span<const std::string> canonical_ids) {
  std::unordered_map<std::string_view, Eigen::Index> index;
  const auto& ids = m.stimulus_ids();
  for (Eigen::Index i = 0; i < m.rows(); ++i) index.emplace(ids[i], i);

  std::vector<std::string> missing;  // in canonical, absent from matrix
  std::unordered_set<std::string_view> wanted;
  std::vector<Eigen::Index> order;
  order.reserve(canonical_ids.size());
  for (const auto& id : canonical_ids) {
    if (!wanted.insert(id).second) throw ValidationError("canonical id list repeats '" + id + "'");
    auto it = index.find(id);
    if (it == index.end()) {
      missing.push_back(id);
    } else {
      order.push_back(it->second);
    }
  }
  std::vector<std::string> extra;  // in matrix, absent from canonical
  for (const auto& id : ids) {
    if (!wanted.contains(id)) extra.push_back(id);
  }
  if (!missing.empty() || !extra.empty()) {
    auto join = [](const std::vector<std::string>& v) {
      std::string s;
      for (const auto& x : v) s += (s.empty() ? "'" : ", '") + x + "'";
      return s;
    };
    std::string msg = "stimulus ids do not match the canonical list";
    if (!missing.empty()) msg += "; missing from matrix: " + join(missing);
    if (!extra.empty()) msg += "; not in canonical list: " + join(extra);
    throw ValidationError(msg);
  }

  bool identity = true;
  for (std::size_t i = 0; i < order.size(); ++i) identity = identity && order[i] == static_cast<Eigen::Index>(i);
  if (identity) return m;

  Matrix values(m.rows(), m.cols());
  for (std::size_t i = 0; i < order.size(); ++i) values.row(static_cast<Eigen::Index>(i)) = m.values().row(order[i]);
  return LabeledMatrix({canonical_ids.begin(), canonical_ids.end()}, std::move(values));
}

}  // namespace decodekit
