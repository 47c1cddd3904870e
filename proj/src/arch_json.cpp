#include <string>

#include "diswot/arch.hpp"
#include "diswot/error.hpp"
#include "json.hpp"

namespace diswot {

using nlohmann::json;

std::string arch_to_json(const ArchDescriptor& desc, SpaceKind kind) {
  json j;
  j["space"] = std::string(space_name(kind));
  if (const auto* d = std::get_if<S0Depths>(&desc)) {
    j["desc"] = d->depths;
  } else if (const auto* c = std::get_if<Nb201Cell>(&desc)) {
    j["desc"] = serialize_nb201(*c);
  } else {
    const auto& cfg = std::get<S2Config>(desc);
    json stages = json::array();
    for (const auto& st : cfg.stages) {
      stages.push_back({{"block", std::string(block_kind_name(st.block))},
                        {"kernel", st.kernel},
                        {"channels", st.channels},
                        {"depth", st.depth},
                        {"stride", st.stride}});
    }
    j["desc"] = {{"stem_channels", cfg.stem_channels}, {"stages", stages}};
  }
  return j.dump();
}

std::pair<SpaceKind, ArchDescriptor> arch_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw UsageError(std::string("architecture JSON: ") + e.what());
  }
  try {
    const SpaceKind kind = parse_space_kind(j.at("space").get<std::string>());
    const json& d = j.at("desc");
    switch (kind) {
      case SpaceKind::S0: {
        const auto v = d.get<std::vector<int>>();
        if (v.size() != 3) throw UsageError("architecture JSON: S0 desc must be [d1,d2,d3]");
        return {kind, S0Depths{{v[0], v[1], v[2]}}};
      }
      case SpaceKind::Nb201:
        return {kind, parse_nb201(d.get<std::string>())};
      case SpaceKind::S2Cifar:
      case SpaceKind::S2ImageNet: {
        S2Config cfg;
        cfg.stem_channels = d.at("stem_channels").get<int>();
        for (const json& s : d.at("stages")) {
          S2Stage st;
          const auto block = s.at("block").get<std::string>();
          if (block == "basic") {
            st.block = BlockKind::Basic;
          } else if (block == "bottleneck") {
            st.block = BlockKind::Bottleneck;
          } else {
            throw UsageError("architecture JSON: unknown block '" + block + "'");
          }
          st.kernel = s.at("kernel").get<int>();
          st.channels = s.at("channels").get<int>();
          st.depth = s.at("depth").get<int>();
          st.stride = s.at("stride").get<int>();
          cfg.stages.push_back(st);
        }
        return {kind, cfg};
      }
    }
  } catch (const json::exception& e) {
    throw UsageError(std::string("architecture JSON: ") + e.what());
  }
  throw Error("unknown search space");
}

}  // namespace diswot
