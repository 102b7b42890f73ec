#ifndef CAUCHYFORM_COMMON_HPP
#define CAUCHYFORM_COMMON_HPP

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

// Error idiom: every precondition / invariant failure throws cf::Error with a
// category prefix ("parse-error:", "invariant-violation:", "precondition:", ...)
// so callers and the CLI can map failures to exit codes without a type zoo.
namespace cauchyform {

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {
template <typename... Ts>
std::string concat(const Ts&... parts) {
  std::ostringstream os;
  (os << ... << parts);
  return os.str();
}
}  // namespace detail

#define CF_REQUIRE(cond, ...)                                             \
  do {                                                                    \
    if (!(cond)) throw ::cauchyform::Error(::cauchyform::detail::concat(__VA_ARGS__)); \
  } while (0)

using Index = std::int64_t;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

}  // namespace cauchyform

#endif
