#include "cyltrack/types.hpp"

#include <algorithm>

namespace cyltrack {

bool configuration_is_valid(const Configuration& config,
                            const std::vector<OutputEvent>& outputs,
                            const std::vector<InputEvent>& inputs) {
  const Index p = static_cast<Index>(outputs.size());
  const Index q = static_cast<Index>(inputs.size());

  std::vector<char> out_seen(static_cast<std::size_t>(p), 0);
  std::vector<char> in_seen(static_cast<std::size_t>(q), 0);

  auto mark = [](std::vector<char>& seen, Index k) {
    if (k < 0 || k >= static_cast<Index>(seen.size())) return false;
    if (seen[static_cast<std::size_t>(k)]) return false;
    seen[static_cast<std::size_t>(k)] = 1;
    return true;
  };

  for (const auto& [o, i] : config.matches) {
    if (!mark(out_seen, o) || !mark(in_seen, i)) return false;
    if (inputs[static_cast<std::size_t>(i)].t <=
        outputs[static_cast<std::size_t>(o)].t) {
      return false;
    }
  }
  for (Index o : config.dead_outputs) {
    if (!mark(out_seen, o)) return false;
  }
  for (Index i : config.spontaneous_inputs) {
    if (!mark(in_seen, i)) return false;
  }

  const auto all = [](const std::vector<char>& seen) {
    return std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; });
  };
  return all(out_seen) && all(in_seen);
}

void canonicalize(Configuration& config) {
  std::sort(config.matches.begin(), config.matches.end());
  std::sort(config.dead_outputs.begin(), config.dead_outputs.end());
  std::sort(config.spontaneous_inputs.begin(), config.spontaneous_inputs.end());
}

bool lex_less(const Configuration& a, const Configuration& b) {
  if (a.matches != b.matches) return a.matches < b.matches;
  return a.dead_outputs < b.dead_outputs;
}

}  // namespace cyltrack
