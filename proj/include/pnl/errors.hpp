#ifndef PNL_ERRORS_HPP_
#define PNL_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace pnl {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define PNL_DEFINE_ERROR(Name)          \
  class Name : public Error {           \
   public:                              \
    using Error::Error;                 \
  }

PNL_DEFINE_ERROR(DegenerateInput);
PNL_DEFINE_ERROR(InvalidHyperparameter);
PNL_DEFINE_ERROR(ShapeError);
PNL_DEFINE_ERROR(CacheError);
PNL_DEFINE_ERROR(LabelRangeError);
PNL_DEFINE_ERROR(ContractViolation);
PNL_DEFINE_ERROR(OracleFailure);
PNL_DEFINE_ERROR(ConfigError);
PNL_DEFINE_ERROR(EmptyInput);
PNL_DEFINE_ERROR(ProtocolError);
PNL_DEFINE_ERROR(FormatError);

#undef PNL_DEFINE_ERROR

/// Raised when a loss or gradient stops being finite. Carries enough
/// context to locate the offending sample.
class DivergenceError : public Error {
 public:
  explicit DivergenceError(const std::string& what, long sample = -1, int epoch = -1,
                           long step = -1)
      : Error(what), sample_(sample), epoch_(epoch), step_(step) {}

  long sample() const noexcept { return sample_; }
  int epoch() const noexcept { return epoch_; }
  long step() const noexcept { return step_; }

 private:
  long sample_;
  int epoch_;
  long step_;
};

}  // namespace pnl

#endif  // PNL_ERRORS_HPP_
