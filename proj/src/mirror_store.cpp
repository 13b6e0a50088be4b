#include "upss/mirror_store.hpp"

#include <condition_variable>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>

#include "upss/error.hpp"

namespace upss {

MirrorStore::MirrorStore(std::vector<StorePtr> members) : members_(std::move(members)) {
  if (members_.empty()) fail(Errc::invalid_argument, "mirror store needs at least one member");
  for (const auto& m : members_)
    if (m->block_size() != members_.front()->block_size())
      fail(Errc::invalid_argument, "mirror members disagree on block size");
}

bool MirrorStore::is_persistent() const {
  for (const auto& m : members_)
    if (m->is_persistent()) return true;
  return false;
}

void MirrorStore::do_put(const BlockName& name, ByteView block) {
  std::vector<std::exception_ptr> errors(members_.size());
  std::vector<std::thread> threads;
  threads.reserve(members_.size());
  for (std::size_t i = 0; i < members_.size(); ++i) {
    threads.emplace_back([&, i] {
      try {
        if (members_[i]->put(block) != name)
          fail(Errc::integrity, "mirror member returned a different name");
      } catch (...) {
        errors[i] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

namespace {

// Outlives the call: slow members keep a reference until they finish.
struct RaceState {
  std::mutex mu;
  std::condition_variable cv;
  std::optional<Bytes> winner;
  std::size_t finished = 0;
  std::exception_ptr last_error;
  bool all_missing = true;
};

}  // namespace

Bytes MirrorStore::do_get(const BlockName& name) {
  auto state = std::make_shared<RaceState>();
  for (const auto& member : members_) {
    std::thread([state, member, name] {
      std::optional<Bytes> got;
      std::exception_ptr err;
      bool missing = false;
      try {
        got = member->get(name);
      } catch (const Error& e) {
        missing = e.code() == Errc::not_found;
        err = std::current_exception();
      } catch (...) {
        err = std::current_exception();
      }
      std::lock_guard lock(state->mu);
      ++state->finished;
      if (got && !state->winner) state->winner = std::move(got);
      if (err) {
        state->last_error = err;
        if (!missing) state->all_missing = false;
      }
      state->cv.notify_all();
    }).detach();
  }

  std::unique_lock lock(state->mu);
  state->cv.wait(lock, [&] { return state->winner || state->finished == members_.size(); });
  if (state->winner) return std::move(*state->winner);
  if (state->all_missing) fail(Errc::not_found, "block " + name.to_text() + " not found in any mirror");
  std::rethrow_exception(state->last_error);
}

}  // namespace upss
