#include "orbits/taylor.hpp"

namespace orbits {

const char* to_string(IntegrationStatus s) {
  switch (s) {
    case IntegrationStatus::reached_end:
      return "reached_end";
    case IntegrationStatus::collision:
      return "collision";
    case IntegrationStatus::step_underflow:
      return "step_underflow";
    case IntegrationStatus::step_limit:
      return "step_limit";
  }
  return "unknown";
}

template class TaylorRecurrence<double>;
template class TaylorRecurrence<Real>;

}  // namespace orbits
