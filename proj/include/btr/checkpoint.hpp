#pragma once

// JSON snapshots for both engines. A Gibbs checkpoint written mid-chain
// restores bit-exactly: model, shrinkage state, augmentation, retained
// draws and the generator state all round-trip at full precision.

#include <string>

#include "btr/gibbs.hpp"
#include "btr/online_em.hpp"

namespace btr {

struct GibbsCheckpoint {
  GibbsConfig config;
  GibbsSnapshot snapshot;
  DataKind kind = DataKind::continuous;  // of the training data
};

struct OnlineCheckpoint {
  OnlineConfig config;
  OnlineResult result;
  DataKind kind = DataKind::continuous;  // of the training data
};

void save_checkpoint(const std::string& path, const GibbsCheckpoint& cp);
void save_checkpoint(const std::string& path, const OnlineCheckpoint& cp);

/// "gibbs" or "online"; throws InputError if the file is not a checkpoint.
std::string checkpoint_engine(const std::string& path);

GibbsCheckpoint load_gibbs_checkpoint(const std::string& path);
OnlineCheckpoint load_online_checkpoint(const std::string& path);

}  // namespace btr
