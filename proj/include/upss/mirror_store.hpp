#pragma once

#include <vector>

#include "upss/blockstore.hpp"

namespace upss {

/// Replicates every block to all members in parallel. A put succeeds only
/// once every member has acknowledged it; a get asks all members at once and
/// returns the first verified answer, ignoring the rest.
class MirrorStore final : public BlockStore {
 public:
  explicit MirrorStore(std::vector<StorePtr> members);

  std::size_t block_size() const override { return members_.front()->block_size(); }
  /// Persistent if any replica is.
  bool is_persistent() const override;
  HashAlg hash_alg() const override { return members_.front()->hash_alg(); }

  const std::vector<StorePtr>& members() const { return members_; }

 protected:
  void do_put(const BlockName& name, ByteView block) override;
  Bytes do_get(const BlockName& name) override;

 private:
  std::vector<StorePtr> members_;
};

}  // namespace upss
