#include "tabi/simulate.hpp"

#include <fstream>

#include "tabi/error.hpp"
#include "tabi/text.hpp"

namespace tabi {

SimulationScript SimulationScript::parse(std::istream& in, std::string_view source_name) {
  SimulationScript s;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    if (t.rfind("customer:", 0) == 0) {
      s.customer.emplace_back(text::trim(t.substr(9)));
    } else if (t.rfind("backend:", 0) == 0) {
      s.backend.push_back(parse_script_line(text::trim(t.substr(8))));
    } else {
      throw Error(ErrorCode::parse_failure, std::string(source_name) + ":" + std::to_string(lineno) +
                                                ": expected customer: or backend:");
    }
  }
  return s;
}

SimulationScript SimulationScript::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::invalid_argument, "cannot open script: " + path.string());
  return parse(in, path.string());
}

SimulationRun run_simulation(const SimulationScript& script, std::shared_ptr<const Resources> resources,
                             BackendHandle handle, const SimulationHooks& hooks) {
  handle.kind = BackendKind::scripted_mock;
  Session session("simulated", std::move(resources), std::make_unique<ScriptedBackend>(script.backend), handle);
  SimulationRun run;
  auto keep = [&](std::string_view customer, TurnResult r) {
    for (auto& rec : turn_records(session, r)) run.records.push_back(std::move(rec));
    if (hooks.on_turn) hooks.on_turn(customer, r);
    run.turns.push_back(std::move(r));
  };
  keep("", session.start());
  for (const auto& utterance : script.customer) {
    if (session.state().status != SessionStatus::active) break;
    for (;;) {
      try {
        keep(utterance, session.advance(utterance));
        break;
      } catch (const Error& e) {
        if (!is_backend_error(e.code())) throw;
        if (hooks.on_backend_error) hooks.on_backend_error(e);
      }
    }
  }
  run.state = session.state();
  run.display = session.display();
  return run;
}

}  // namespace tabi
