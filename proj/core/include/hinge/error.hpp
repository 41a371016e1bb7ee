#pragma once

#include <stdexcept>
#include <string>

namespace hinge {

// Library errors are exceptions with a stable category name so callers (and the
// CLI) can map them to exit codes without string matching.
class Error : public std::runtime_error {
 public:
  Error(std::string category, const std::string& what)
      : std::runtime_error(category + ": " + what), category_(std::move(category)) {}
  const std::string& category() const { return category_; }

 private:
  std::string category_;
};

#define HINGE_DEFINE_ERROR(Name)                                   \
  class Name : public Error {                                      \
   public:                                                         \
    explicit Name(const std::string& what) : Error(#Name, what) {} \
  }

HINGE_DEFINE_ERROR(TypeMismatchError);
HINGE_DEFINE_ERROR(FrozenGraphError);
HINGE_DEFINE_ERROR(NotFrozenError);
HINGE_DEFINE_ERROR(IndexOutOfRangeError);
HINGE_DEFINE_ERROR(DuplicateNameError);
HINGE_DEFINE_ERROR(UnknownNameError);
HINGE_DEFINE_ERROR(BrokenChainError);
HINGE_DEFINE_ERROR(ShapeMismatchError);
HINGE_DEFINE_ERROR(NonPositiveTemperatureError);
HINGE_DEFINE_ERROR(PrefixMismatchError);
HINGE_DEFINE_ERROR(NotLowOrderError);
HINGE_DEFINE_ERROR(BudgetError);
HINGE_DEFINE_ERROR(ConfigError);
HINGE_DEFINE_ERROR(DataError);
HINGE_DEFINE_ERROR(IoError);

#undef HINGE_DEFINE_ERROR

}  // namespace hinge
