#include "ini/error.hpp"

#include <sstream>

namespace ini {

DegenerateNormError::DegenerateNormError(std::string which, double norm)
    : Error("degenerate norm for " + which + ": " + std::to_string(norm)),
      which_(std::move(which)),
      norm_(norm) {}

namespace {
std::string budget_message(std::size_t budget, std::size_t spent, std::size_t requested) {
  std::ostringstream os;
  os << "query budget exceeded: budget " << budget << ", spent " << spent << ", requested "
     << requested;
  return os.str();
}
}  // namespace

BudgetExceededError::BudgetExceededError(std::size_t budget, std::size_t spent,
                                         std::size_t requested)
    : Error(budget_message(budget, spent, requested)) {}

NonFiniteLossError::NonFiniteLossError(std::size_t iteration, std::string loss_name)
    : Error("non-finite " + loss_name + " at iteration " + std::to_string(iteration)),
      iteration_(iteration),
      loss_name_(std::move(loss_name)) {}

ThresholdViolationError::ThresholdViolationError(double benign_accuracy, double threshold)
    : Error("benign accuracy " + std::to_string(benign_accuracy) + " below threshold " +
            std::to_string(threshold)),
      benign_accuracy_(benign_accuracy),
      threshold_(threshold) {}

StageError::StageError(std::string stage, const std::string& what)
    : Error("[" + stage + "] " + what), stage_(std::move(stage)) {}

}  // namespace ini
