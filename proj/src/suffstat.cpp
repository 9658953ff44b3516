#include "conelrt/suffstat.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace conelrt {

SuffStat::SuffStat(Eigen::MatrixXd s, long n_obs) : m(static_cast<int>(s.rows())), n(n_obs), S(std::move(s)) {
  if (S.rows() != S.cols() || S.rows() < 1) throw std::invalid_argument("SuffStat: S must be square and nonempty");
  if (n < 1) throw std::invalid_argument("SuffStat: n must be >= 1");
  if (!S.allFinite() || !is_symmetric(S)) throw std::invalid_argument("SuffStat: S must be finite and symmetric");
  S = 0.5 * (S + S.transpose());
}

SuffStat SuffStat::from_data(const Eigen::MatrixXd& x) {
  if (x.rows() < 1 || x.cols() < 1) throw std::invalid_argument("SuffStat::from_data: empty data");
  Eigen::MatrixXd s = x.transpose() * x / static_cast<double>(x.rows());
  return SuffStat(std::move(s), static_cast<long>(x.rows()));
}

SuffStat draw_suffstat(const Eigen::MatrixXd& sigma, long n, Stream& rng) {
  const Eigen::Index m = sigma.rows();
  if (n < 1) throw std::invalid_argument("draw_suffstat: n must be >= 1");
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) throw std::invalid_argument("draw_suffstat: sigma is not positive definite");
  const Eigen::MatrixXd l = llt.matrixL();
  if (n < m) {
    Eigen::MatrixXd x = rng.normal_matrix(n, m) * l.transpose();
    return SuffStat::from_data(x);
  }
  // n S ~ Wishart_m(n, sigma) = L A A' L' with A lower triangular.
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    a(i, i) = std::sqrt(rng.chi_square(static_cast<double>(n - i)));
    for (Eigen::Index j = 0; j < i; ++j) a(i, j) = rng.normal();
  }
  const Eigen::MatrixXd la = l * a;
  Eigen::MatrixXd s = la * la.transpose() / static_cast<double>(n);
  return SuffStat(std::move(s), n);
}

SuffStat read_data_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t pos = 0;
        row.push_back(std::stod(cell, &pos));
        while (pos < cell.size() && std::isspace(static_cast<unsigned char>(cell[pos]))) ++pos;
        if (pos != cell.size()) numeric = false;
      } catch (const std::exception&) {
        numeric = false;
      }
    }
    if (!numeric) {
      if (rows.empty() && lineno == 1) continue;  // header
      throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": non-numeric cell");
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": ragged row");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::invalid_argument(path + ": no data rows");
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return SuffStat::from_data(x);
}

SuffStat read_cov_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
  if (!doc.contains("n") || !doc.contains("S")) throw std::invalid_argument(path + ": need fields 'n' and 'S'");
  try {
    const auto rows = doc.at("S").get<std::vector<std::vector<double>>>();
    const auto m = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXd s(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
      if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)].size()) != m) {
        throw std::invalid_argument(path + ": S is not square");
      }
      for (Eigen::Index j = 0; j < m; ++j) s(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
    return SuffStat(std::move(s), doc.at("n").get<long>());
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

}  // namespace conelrt
