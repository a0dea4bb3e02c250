#include "replica_lab/ksat.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "replica_lab/errors.hpp"

namespace replica_lab::ksat {

SpinConfig spins_from_bools(const std::vector<bool>& x) {
  SpinConfig s(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) s[i] = x[i] ? 1 : -1;
  return s;
}

std::vector<bool> bools_from_spins(const SpinConfig& s) {
  std::vector<bool> x(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) x[i] = s[i] > 0;
  return x;
}

SpinConfig spins_from_bits(std::uint64_t bits, int n) {
  SpinConfig s(n);
  for (int i = 0; i < n; ++i) s[i] = (bits >> i) & 1 ? 1 : -1;
  return s;
}

KSatInstance::KSatInstance(int n, int k, std::vector<Clause> clauses,
                           std::optional<std::uint64_t> seed)
    : n_(n), k_(k), clauses_(std::move(clauses)), seed_(seed) {
  if (n_ < 0) throw std::invalid_argument("KSatInstance: n must be >= 0");
  if (k_ < 0) throw std::invalid_argument("KSatInstance: k must be >= 0");
  if (k_ > n_) throw std::invalid_argument("KSatInstance: k must be <= n");
  if (!clauses_.empty() && k_ == 0) {
    throw std::invalid_argument("KSatInstance: clauses require k >= 1");
  }
  for (auto& clause : clauses_) {
    if (static_cast<int>(clause.size()) != k_) {
      throw std::invalid_argument("KSatInstance: clause length differs from k");
    }
    std::sort(clause.begin(), clause.end(),
              [](const Literal& a, const Literal& b) { return a.var < b.var; });
    for (std::size_t i = 0; i < clause.size(); ++i) {
      const Literal& lit = clause[i];
      if (lit.var < 0 || lit.var >= n_) {
        throw std::invalid_argument("KSatInstance: variable index out of range");
      }
      if (lit.sign != 1 && lit.sign != -1) {
        throw std::invalid_argument("KSatInstance: sign must be +1 or -1");
      }
      if (i > 0 && clause[i - 1].var == lit.var) {
        throw std::invalid_argument("KSatInstance: repeated variable in clause");
      }
    }
  }
}

int EnsembleParams::clause_count() const {
  if (m >= 0) return m;
  if (alpha >= 0.0) return static_cast<int>(std::llround(alpha * n));
  throw std::invalid_argument("EnsembleParams: neither m nor alpha given");
}

double EnsembleParams::clause_density() const {
  if (alpha >= 0.0) return alpha;
  if (m >= 0) return n > 0 ? static_cast<double>(m) / n : 0.0;
  throw std::invalid_argument("EnsembleParams: neither m nor alpha given");
}

void EnsembleParams::validate() const {
  if (n < 0) throw std::invalid_argument("EnsembleParams: n must be >= 0");
  int count = clause_count();
  if (count < 0) throw std::invalid_argument("EnsembleParams: m must be >= 0");
  if (count > 0 && n == 0) {
    throw std::invalid_argument("EnsembleParams: n = 0 admits no clauses");
  }
  if (count > 0 && k < 1) {
    throw std::invalid_argument("EnsembleParams: k must be >= 1 when m > 0");
  }
  if (k > n) throw std::invalid_argument("EnsembleParams: k must be <= n");
}

std::vector<Clause> generate_clauses(int n, int k, int count, SplitMix64& rng) {
  std::vector<Clause> clauses;
  clauses.reserve(count);
  std::vector<int> scratch(n);
  std::iota(scratch.begin(), scratch.end(), 0);
  for (int j = 0; j < count; ++j) {
    // Partial Fisher-Yates: k words. The scratch permutation carries over
    // between clauses, which leaves the subset distribution uniform.
    for (int i = 0; i < k; ++i) {
      int pick = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - i)));
      std::swap(scratch[i], scratch[pick]);
    }
    std::uint64_t sign_bits = rng.next();  // 1 word for all k signs
    Clause clause(k);
    for (int i = 0; i < k; ++i) {
      clause[i] = Literal{scratch[i], (sign_bits >> i) & 1 ? 1 : -1};
    }
    clauses.push_back(std::move(clause));
  }
  return clauses;
}

KSatInstance generate_instance(const EnsembleParams& params) {
  params.validate();
  int count = params.clause_count();
  SplitMix64 rng(params.seed);
  return KSatInstance(params.n, params.k, generate_clauses(params.n, params.k, count, rng),
                      params.seed);
}

SparseClauseMatrix clause_matrix(const KSatInstance& inst) {
  SparseClauseMatrix mat;
  mat.rows = inst.m();
  mat.cols = inst.n();
  mat.entries.reserve(mat.rows);
  for (const Clause& clause : inst.clauses()) {
    std::vector<std::pair<int, int>> row;
    row.reserve(clause.size());
    for (const Literal& lit : clause) row.emplace_back(lit.var, lit.sign);
    mat.entries.push_back(std::move(row));
  }
  return mat;
}

KSatInstance instance_from_matrix(const SparseClauseMatrix& mat) {
  std::vector<Clause> clauses;
  clauses.reserve(mat.entries.size());
  std::size_t k = mat.entries.empty() ? 0 : mat.entries.front().size();
  for (const auto& row : mat.entries) {
    Clause clause;
    clause.reserve(row.size());
    for (const auto& [col, sign] : row) clause.push_back(Literal{col, sign});
    clauses.push_back(std::move(clause));
  }
  return KSatInstance(mat.cols, static_cast<int>(k), std::move(clauses));
}

int energy(const KSatInstance& inst, std::span<const std::int8_t> spins) {
  if (static_cast<int>(spins.size()) != inst.n()) {
    throw std::invalid_argument("energy: spin count differs from n");
  }
  long long product_sum = 0;
  for (const Clause& clause : inst.clauses()) {
    long long prod = 1;  // each factor (1 - J s) is 0 or 2
    for (const Literal& lit : clause) {
      prod *= 1 - lit.sign * static_cast<int>(spins[lit.var]);
      if (prod == 0) break;
    }
    product_sum += prod;
  }
  return static_cast<int>(product_sum >> inst.k());
}

int count_violated_direct(const KSatInstance& inst, std::span<const std::int8_t> spins) {
  if (static_cast<int>(spins.size()) != inst.n()) {
    throw std::invalid_argument("count_violated_direct: spin count differs from n");
  }
  int violated = 0;
  for (const Clause& clause : inst.clauses()) {
    bool any_true = false;
    for (const Literal& lit : clause) {
      bool x = spins[lit.var] > 0;
      if (lit.sign > 0 ? x : !x) {
        any_true = true;
        break;
      }
    }
    if (!any_true) ++violated;
  }
  return violated;
}

std::string export_dimacs(const KSatInstance& inst) {
  std::ostringstream out;
  out << "p cnf " << inst.n() << ' ' << inst.m() << '\n';
  for (const Clause& clause : inst.clauses()) {
    for (const Literal& lit : clause) out << lit.sign * (lit.var + 1) << ' ';
    out << "0\n";
  }
  return out.str();
}

KSatInstance import_dimacs(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  int n = -1, m = -1;

  // header
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == 'c') continue;
    if (line[0] != 'p') throw ParseError(line_no, "expected 'p cnf <n> <m>' header");
    std::istringstream hs(line);
    std::string p, cnf;
    hs >> p >> cnf >> n >> m;
    if (hs.fail() || cnf != "cnf" || n < 0 || m < 0) {
      throw ParseError(line_no, "malformed header '" + line + "'");
    }
    if (n == 0 && m > 0) throw ParseError(line_no, "header declares clauses over 0 variables");
    break;
  }
  if (n < 0) throw ParseError(line_no, "missing 'p cnf' header");

  std::vector<Clause> clauses;
  Clause current;
  bool in_clause = false;
  int clause_line = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == 'c') continue;
    std::istringstream ls(line);
    long lit;
    while (ls >> lit) {
      if (!in_clause) {
        in_clause = true;
        clause_line = line_no;
        current.clear();
      }
      if (lit == 0) {
        clauses.push_back(current);
        in_clause = false;
        continue;
      }
      long var = std::labs(lit);
      if (var > n) throw ParseError(line_no, "literal " + std::to_string(lit) + " out of range");
      current.push_back(Literal{static_cast<int>(var) - 1, lit > 0 ? 1 : -1});
    }
    std::string tail;
    ls.clear();
    if (ls >> tail) throw ParseError(line_no, "unexpected token '" + tail + "'");
  }
  if (in_clause) throw ParseError(clause_line, "clause missing terminating 0");
  if (static_cast<int>(clauses.size()) != m) {
    throw ParseError(line_no, "header declares " + std::to_string(m) + " clauses, found " +
                                  std::to_string(clauses.size()));
  }
  int k = clauses.empty() ? 0 : static_cast<int>(clauses.front().size());
  try {
    return KSatInstance(n, k, std::move(clauses));
  } catch (const std::invalid_argument& e) {
    throw ParseError(line_no, e.what());
  }
}

std::string export_json(const KSatInstance& inst) {
  nlohmann::ordered_json j;
  j["n"] = inst.n();
  j["k"] = inst.k();
  j["m"] = inst.m();
  if (inst.seed()) {
    j["seed"] = *inst.seed();
  } else {
    j["seed"] = nullptr;
  }
  auto clause_list = nlohmann::ordered_json::array();
  for (const Clause& clause : inst.clauses()) {
    auto lits = nlohmann::ordered_json::array();
    for (const Literal& lit : clause) lits.push_back(lit.sign * (lit.var + 1));
    clause_list.push_back(std::move(lits));
  }
  j["clauses"] = std::move(clause_list);
  return j.dump(2) + "\n";
}

KSatInstance import_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  int n = j.at("n").get<int>();
  int k = j.at("k").get<int>();
  std::optional<std::uint64_t> seed;
  if (j.contains("seed") && !j["seed"].is_null()) seed = j["seed"].get<std::uint64_t>();
  std::vector<Clause> clauses;
  for (const auto& lits : j.at("clauses")) {
    Clause clause;
    for (const auto& lit : lits) {
      long v = lit.get<long>();
      if (v == 0) throw std::invalid_argument("import_json: literal 0 is reserved");
      clause.push_back(Literal{static_cast<int>(std::labs(v)) - 1, v > 0 ? 1 : -1});
    }
    clauses.push_back(std::move(clause));
  }
  return KSatInstance(n, k, std::move(clauses), seed);
}

}  // namespace replica_lab::ksat
