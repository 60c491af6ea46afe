#pragma once

// Staged fusion across "locations": stage 1 freezes G1 and trains G2 on
// paired events, stage 2 freezes {G1, G2} and trains G3 on triples, and the
// cascade loop periodically re-fetches the latest uploaded G1/G2 so client
// improvements flow in mid-run. Wall-clock "every few minutes" is mapped to
// a deterministic round counter.

#include <chrono>
#include <functional>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "fedgan/fusion.hpp"
#include "fedgan/registry.hpp"
#include "fedgan/serialize.hpp"

namespace fedgan {

struct CascadeSchedule {
  int total_rounds = 25;
  int refresh_interval = 10;  // rounds between registry refreshes
  int steps_per_round = 120;

  void validate() const {
    if (total_rounds < 1) throw ConfigError("cascade: total_rounds must be >= 1");
    if (refresh_interval < 1) throw ConfigError("cascade: refresh interval must be >= 1");
    if (steps_per_round < 1) throw ConfigError("cascade: steps_per_round must be >= 1");
  }
};

struct StageResult {
  GeneratorModel gen;
  uint32_t uploaded_version = 0;
  std::vector<StepLoss> history;
};

struct Stage2Result {
  FusionNetwork net;
  std::vector<StepLoss> history;
};

struct RefreshRecord {
  int round = 0;
  std::string model_id;
  uint32_t version = 0;
};

struct CascadeResult {
  FusionNetwork net;
  std::vector<RefreshRecord> refresh_log;
  std::vector<StepLoss> history;
  bool partial = false;  // a mid-run refresh could not reach the registry
};

// Transport hiccups get a bounded retry; definitive answers (not found,
// invalid payload) propagate immediately.
inline ModelEnvelope fetch_latest_with_retry(RegistryAccess& registry, const std::string& id,
                                             int attempts = 3) {
  for (int attempt = 1;; ++attempt) {
    try {
      return registry.fetch_latest(id);
    } catch (const NetError&) {
      if (attempt >= attempts) throw;
      std::this_thread::sleep_for(std::chrono::milliseconds(20L * attempt));
    }
  }
}

// Stage 1: fuse frozen G1 with a fresh G2, train on (location1, location2)
// pairs, upload the result.
inline StageResult run_stage1(RegistryAccess& registry, const ModelEnvelope& g1_env,
                              const PairedDataset& pairs, const MlpSpec& new_gen_spec,
                              const MlpSpec& d_spec, const GanTrainConfig& cfg,
                              RngStream& init_rng, const std::string& upload_id,
                              const std::string& creator) {
  GeneratorModel g1 = deserialize_model(g1_env.payload).to_generator();
  FusionNetwork net = build_fusion({std::move(g1)}, new_gen_spec, d_spec, init_rng);
  StageResult result;
  result.history = train_fusion(net, pairs, cfg);
  result.gen = net.trainable_gen;
  result.uploaded_version = registry.upload(upload_id, creator, serialize_model(result.gen));
  return result;
}

// Stage 2: fuse frozen {G1, G2} with a fresh G3 over triples.
inline Stage2Result run_stage2(const ModelEnvelope& g1_env, const ModelEnvelope& g2_env,
                               const PairedDataset& triples, const MlpSpec& g3_spec,
                               const MlpSpec& d_spec, const GanTrainConfig& cfg,
                               RngStream& init_rng) {
  GeneratorModel g1 = deserialize_model(g1_env.payload).to_generator();
  GeneratorModel g2 = deserialize_model(g2_env.payload).to_generator();
  Stage2Result result;
  result.net = build_fusion({std::move(g1), std::move(g2)}, g3_spec, d_spec, init_rng);
  result.history = train_fusion(result.net, triples, cfg);
  return result;
}

// The Table-4 loop: every round trains steps_per_round stage-2 steps; at
// rounds divisible by the refresh interval the latest G1/G2 are fetched and
// swapped into the frozen slots while G3's optimizer state carries on.
// on_round, when set, fires at the start of each round (tests use it to
// emulate clients uploading newer models mid-run).
inline CascadeResult run_cascade_loop(RegistryAccess& registry, const CascadeSchedule& schedule,
                                      const std::string& g1_id, const std::string& g2_id,
                                      const PairedDataset& triples, const MlpSpec& g3_spec,
                                      const MlpSpec& d_spec, const GanTrainConfig& cfg,
                                      RngStream& init_rng,
                                      const std::function<void(int)>& on_round = {}) {
  schedule.validate();
  ModelEnvelope g1_env = fetch_latest_with_retry(registry, g1_id);
  ModelEnvelope g2_env = fetch_latest_with_retry(registry, g2_id);
  CascadeResult result;
  result.net = build_fusion({deserialize_model(g1_env.payload).to_generator(),
                             deserialize_model(g2_env.payload).to_generator()},
                            g3_spec, d_spec, init_rng);
  FusionTrainer trainer(result.net, triples, cfg);
  std::map<std::string, uint32_t> last_seen{{g1_id, g1_env.version}, {g2_id, g2_env.version}};

  for (int round = 1; round <= schedule.total_rounds; ++round) {
    if (on_round) on_round(round);
    auto chunk = trainer.run(schedule.steps_per_round);
    result.history.insert(result.history.end(), chunk.begin(), chunk.end());

    if (round % schedule.refresh_interval == 0) {
      ModelEnvelope e1, e2;
      try {
        e1 = fetch_latest_with_retry(registry, g1_id);
        e2 = fetch_latest_with_retry(registry, g2_id);
      } catch (const NetError&) {
        result.partial = true;
        return result;
      }
      for (const auto& env : {e1, e2}) {
        if (env.version < last_seen[env.model_id]) {
          throw RegistryError(RegistryError::Code::storage,
                              "registry returned an older version for " + env.model_id);
        }
        last_seen[env.model_id] = env.version;
      }
      trainer.replace_frozen({deserialize_model(e1.payload).to_generator(),
                              deserialize_model(e2.payload).to_generator()});
      result.refresh_log.push_back({round, g1_id, e1.version});
      result.refresh_log.push_back({round, g2_id, e2.version});
    }
  }
  return result;
}

// Partner synthesis on the stage-2 net: each sampled row is a coherent
// (location1, location2, location3) triple tied together by one z.
inline PairedDataset predict_future(const FusionNetwork& stage2_net, int n, RngStream& rng) {
  return sample_pairs(stage2_net, n, rng);
}

}  // namespace fedgan
