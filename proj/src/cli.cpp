#include "upss/cli.hpp"

#include <fcntl.h>
#include <signal.h>
#include <sys/file.h>
#include <termios.h>
#include <unistd.h>

#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <map>
#include <sstream>

#include "upss/bench.hpp"
#include "upss/caching_store.hpp"
#include "upss/fsobjects.hpp"
#include "upss/mirror_store.hpp"
#include "upss/netstore.hpp"
#include "upss/uvc.hpp"
#include "upss/vault.hpp"

namespace upss::cli {

namespace fs = std::filesystem;

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::uint64_t parse_uint(std::string_view text, std::string_view what) {
  std::uint64_t v = 0;
  auto t = trim(text);
  if (t.empty()) fail(Errc::invalid_argument, std::string(what) + ": expected a number");
  for (char c : t) {
    if (c < '0' || c > '9') fail(Errc::invalid_argument, std::string(what) + ": expected a number");
    v = v * 10 + static_cast<std::uint64_t>(c - '0');
  }
  return v;
}

PaddingMode parse_padding(std::string_view text) {
  if (text == "random") return PaddingMode::random;
  if (text == "deterministic") return PaddingMode::deterministic;
  fail(Errc::invalid_argument, "padding must be 'random' or 'deterministic'");
}

Bytes read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    if (!fs::exists(path)) fail(Errc::not_found, "no such file: " + path.string());
    fail(Errc::io, "cannot read " + path.string());
  }
  return Bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

// Recursive-descent parser for the store topology grammar.
class TopologyParser {
 public:
  TopologyParser(std::string_view text, std::size_t block_size) : s_(text), bs_(block_size) {}

  StorePtr parse_all() {
    auto store = parse();
    skip_ws();
    if (pos_ != s_.size()) error("unexpected '" + std::string(s_.substr(pos_)) + "'");
    return store;
  }

 private:
  StorePtr parse() {
    skip_ws();
    if (accept("memory")) return std::make_shared<MemoryStore>(bs_);
    if (accept("file:")) return std::make_shared<FileStore>(token(), bs_);
    if (accept("net:")) return std::make_shared<net::RemoteStore>(net::Endpoint::parse(token()));
    if (accept("cache(")) {
      auto near = parse();
      expect(',');
      auto far = parse();
      expect(',');
      CachingOptions opts;
      opts.journal_path = token();
      expect(')');
      return std::make_shared<CachingStore>(std::move(near), std::move(far), opts);
    }
    if (accept("mirror[")) {
      std::vector<StorePtr> members{parse()};
      skip_ws();
      while (accept(",")) members.push_back(parse());
      expect(']');
      return std::make_shared<MirrorStore>(std::move(members));
    }
    if (accept("latency(")) {
      auto inner = parse();
      expect(',');
      auto micros = parse_uint(token(), "latency");
      expect(')');
      return std::make_shared<LatencyStore>(std::move(inner), std::chrono::microseconds(micros));
    }
    error("expected a store at '" + std::string(s_.substr(pos_)) + "'");
  }

  std::string token() {
    skip_ws();
    auto start = pos_;
    while (pos_ < s_.size() && s_[pos_] != ',' && s_[pos_] != ')' && s_[pos_] != ']') ++pos_;
    auto t = trim(s_.substr(start, pos_ - start));
    if (t.empty()) error("empty argument");
    return std::string(t);
  }

  bool accept(std::string_view word) {
    skip_ws();
    if (s_.substr(pos_, word.size()) != word) return false;
    pos_ += word.size();
    return true;
  }

  void expect(char c) {
    skip_ws();
    if (pos_ >= s_.size() || s_[pos_] != c) error(std::string("expected '") + c + "'");
    ++pos_;
  }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  [[noreturn]] void error(const std::string& msg) {
    fail(Errc::invalid_argument, "store topology: " + msg);
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  std::size_t bs_;
};

std::string prompt_passphrase() {
  std::cerr << "passphrase: " << std::flush;
  termios old{};
  bool tty = ::tcgetattr(STDIN_FILENO, &old) == 0;
  if (tty) {
    termios quiet = old;
    quiet.c_lflag &= ~static_cast<tcflag_t>(ECHO);
    ::tcsetattr(STDIN_FILENO, TCSANOW, &quiet);
  }
  std::string line;
  std::getline(std::cin, line);
  if (tty) ::tcsetattr(STDIN_FILENO, TCSANOW, &old);
  std::cerr << "\n";
  return line;
}

class VaultLock {
 public:
  explicit VaultLock(const fs::path& vault) {
    auto path = vault;
    path += ".lock";
    fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0600);
    if (fd_ < 0) fail(Errc::io, "cannot open lock file " + path.string());
    if (::flock(fd_, LOCK_EX) != 0) fail(Errc::io, "cannot lock " + path.string());
  }
  ~VaultLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  VaultLock(const VaultLock&) = delete;
  VaultLock& operator=(const VaultLock&) = delete;

 private:
  int fd_ = -1;
};

class Session {
 public:
  Session(CliConfig cfg, StorePtr store) : cfg_(std::move(cfg)), store_(std::move(store)) {}

  ~Session() {
    if (auto* cache = dynamic_cast<CachingStore*>(store_.get())) cache->flush(std::chrono::seconds(30));
  }

  StorePtr store() {
    if (!store_) store_ = make_store(cfg_.store, cfg_.block_size);
    return store_;
  }
  ObjectContext ctx() { return ObjectContext::make(store(), cfg_.padding); }
  const CliConfig& config() const { return cfg_; }

  std::string passphrase() {
    if (cfg_.passphrase) return *cfg_.passphrase;
    if (const char* env = std::getenv(cfg_.passphrase_env.c_str())) return env;
    if (::isatty(STDIN_FILENO)) return prompt_passphrase();
    fail(Errc::invalid_argument, "no passphrase: set " + cfg_.passphrase_env);
  }

  void lock() {
    if (!lock_) lock_ = std::make_unique<VaultLock>(cfg_.vault);
  }

  std::shared_ptr<DirectoryObject> root() {
    if (!root_) {
      lock();
      auto ptr = load_root(cfg_.vault, passphrase());
      root_ = DirectoryObject::open(ctx(), ptr);
    }
    return root_;
  }

  /// Persists the tree and records the new root in the vault.
  BlockPointer save() {
    auto ptr = root()->persist();
    VaultParams params;
    params.iterations = cfg_.vault_iterations;
    save_root(cfg_.vault, passphrase(), ptr, params);
    return ptr;
  }

 private:
  CliConfig cfg_;
  StorePtr store_;
  std::unique_ptr<VaultLock> lock_;
  std::shared_ptr<DirectoryObject> root_;
};

std::pair<std::shared_ptr<DirectoryObject>, std::string> parent_of(DirectoryObject& root,
                                                                   std::string_view path,
                                                                   bool create) {
  auto parts = split_path(path);
  if (parts.empty()) fail(Errc::invalid_argument, "path names the root directory");
  auto leaf = parts.back();
  parts.pop_back();
  auto dir = std::static_pointer_cast<DirectoryObject>(root.shared_from_this());
  std::string walked;
  for (const auto& part : parts) {
    walked += "/" + part;
    if (!dir->contains(part)) {
      if (!create) fail(Errc::not_found, "no such directory: " + walked);
      dir = dir->mkdir(part);
      continue;
    }
    auto node = dir->child(part);
    if (node->kind() != ObjectKind::directory) fail(Errc::invalid_argument, walked + " is not a directory");
    dir = node->as_directory();
  }
  return {dir, leaf};
}

NodePtr lookup_path(DirectoryObject& root, std::string_view path) {
  try {
    return root.lookup(path);
  } catch (const Error& e) {
    if (e.code() == Errc::not_found) fail(Errc::not_found, "no such path: " + std::string(path));
    throw;
  }
}

std::optional<BlockPointer> as_pointer(std::string_view text) {
  if (text.size() < 2 * (kPointerHeaderSize + 32) || text.find('/') != std::string_view::npos)
    return std::nullopt;
  try {
    return pointer_from_hex(text);
  } catch (const Error&) {
    return std::nullopt;
  }
}

void write_bytes(std::ostream& out, ByteView data) {
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
}

void list_directory(std::ostream& out, DirectoryObject& dir) {
  for (const auto& [name, entry] : dir.entries())
    out << name << (entry.kind == ObjectKind::directory ? "/" : "") << "\n";
}

void find_paths(DirectoryObject& dir, const std::string& prefix, const BlockPointer& target,
                std::vector<std::string>& found) {
  for (const auto& name : dir.names()) {
    const auto& entry = dir.entries().at(name);
    auto path = prefix + "/" + name;
    if (entry.pointer && (*entry.pointer == target || entry.pointer->name == target.name))
      found.push_back(path);
    if (entry.kind == ObjectKind::directory) find_paths(*dir.child(name)->as_directory(), path, target, found);
  }
}

std::string describe(Node& node) {
  auto ptr = node.persist();
  const auto& v = *node.blob().base();
  std::size_t blind = 0;
  for (const auto& x : v.extents) blind += x.ref.readable() ? 0 : 1;
  std::ostringstream out;
  out << "kind: " << to_string(node.kind()) << "\n"
      << "size: " << node.size() << "\n"
      << "blocks: " << v.extents.size() << "\n"
      << "redacted_blocks: " << blind << "\n"
      << "name: " << ptr.name.to_text() << "\n"
      << "pointer: " << pointer_to_hex(ptr) << "\n"
      << "prev: " << (v.prev ? v.prev->name.to_text() + (v.prev->readable() ? "" : " (name only)") : "none")
      << "\n";
  if (node.kind() == ObjectKind::directory) out << "entries: " << node.as_directory()->entries().size() << "\n";
  return out.str();
}

int wait_for_signal() {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
  int sig = 0;
  sigwait(&set, &sig);
  return sig;
}

}  // namespace

CliConfig parse_config(std::string_view text, CliConfig cfg) {
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto t = trim(line);
    if (t.empty()) continue;
    auto eq = t.find('=');
    if (eq == std::string_view::npos)
      fail(Errc::invalid_argument, "config line " + std::to_string(lineno) + ": expected key = value");
    auto key = trim(t.substr(0, eq));
    auto value = std::string(trim(t.substr(eq + 1)));
    if (key == "vault") cfg.vault = value;
    else if (key == "store") cfg.store = value;
    else if (key == "passphrase_env") cfg.passphrase_env = value;
    else if (key == "padding") cfg.padding = parse_padding(value);
    else if (key == "block_size") {
      cfg.block_size = parse_uint(value, "block_size");
      validate_block_size(cfg.block_size);
    } else if (key == "vault_iterations") {
      auto n = parse_uint(value, "vault_iterations");
      if (n == 0 || n > 100'000'000) fail(Errc::invalid_argument, "vault_iterations out of range");
      cfg.vault_iterations = static_cast<std::uint32_t>(n);
    } else {
      fail(Errc::invalid_argument, "config line " + std::to_string(lineno) + ": unknown key '" +
                                       std::string(key) + "'");
    }
  }
  return cfg;
}

CliConfig load_config(const fs::path& path, CliConfig base) {
  auto bytes = read_file(path);
  return parse_config(to_string(bytes), std::move(base));
}

StorePtr make_store(std::string_view topology, std::size_t block_size) {
  return TopologyParser(topology, block_size).parse_all();
}

int exit_code(Errc code) {
  switch (code) {
    case Errc::invalid_argument:
    case Errc::already_exists:
    case Errc::out_of_range:
    case Errc::unsupported:
      return 1;
    case Errc::not_found:
      return 2;
    case Errc::auth:
      return 3;
    default:
      return 4;
  }
}

Outcome dispatch(const std::vector<std::string>& args, const CliConfig& config, StorePtr store) {
  Outcome result;
  std::ostringstream out, err;

  CLI::App app{"User-empowering encrypted storage", "upss"};
  app.require_subcommand(1);
  std::string config_file, vault_opt, store_opt, padding_opt;
  app.add_option("--config", config_file, "Configuration file");
  app.add_option("--vault", vault_opt, "Vault file holding the root pointer");
  app.add_option("--store", store_opt, "Store topology");
  app.add_option("--padding", padding_opt, "random | deterministic");

  std::map<CLI::App*, std::function<int(Session&)>> actions;
  auto command = [&](const std::string& name, const std::string& help) {
    return app.add_subcommand(name, help);
  };

  // init
  bool force = false;
  auto* c_init = command("init", "Create an empty root directory and vault");
  c_init->add_flag("--force", force, "Replace an existing vault");
  actions[c_init] = [&](Session& s) {
    s.lock();
    if (fs::exists(s.config().vault) && !force)
      fail(Errc::already_exists, "vault " + s.config().vault.string() + " already exists");
    auto root = DirectoryObject::create(s.ctx());
    auto ptr = root->persist();
    VaultParams params;
    params.iterations = s.config().vault_iterations;
    save_root(s.config().vault, s.passphrase(), ptr, params);
    out << ptr.name.to_text() << "\n";
    return 0;
  };

  std::string path = "/", path2, data, from;
  auto* c_ls = command("ls", "List a directory");
  c_ls->add_option("path", path);
  actions[c_ls] = [&](Session& s) {
    auto node = lookup_path(*s.root(), path);
    if (node->kind() == ObjectKind::directory)
      list_directory(out, *node->as_directory());
    else
      out << split_path(path).back() << "\n";
    return 0;
  };

  auto* c_info = command("info", "Show metadata for a path");
  c_info->add_option("path", path);
  actions[c_info] = [&](Session& s) {
    out << describe(*lookup_path(*s.root(), path));
    return 0;
  };

  auto* c_touch = command("touch", "Create an empty file if absent");
  c_touch->add_option("path", path)->required();
  actions[c_touch] = [&](Session& s) {
    auto [dir, leaf] = parent_of(*s.root(), path, false);
    if (!dir->contains(leaf)) {
      dir->create_file(leaf);
      s.save();
    } else if (dir->entries().at(leaf).kind != ObjectKind::file) {
      fail(Errc::already_exists, path + " is a directory");
    }
    return 0;
  };

  bool parents = false;
  auto* c_mkdir = command("mkdir", "Create a directory");
  c_mkdir->add_option("path", path)->required();
  c_mkdir->add_flag("-p,--parents", parents, "Create missing parents; existing is not an error");
  actions[c_mkdir] = [&](Session& s) {
    auto [dir, leaf] = parent_of(*s.root(), path, parents);
    if (dir->contains(leaf)) {
      if (!parents || dir->entries().at(leaf).kind != ObjectKind::directory)
        fail(Errc::already_exists, path + " already exists");
    } else {
      dir->mkdir(leaf);
    }
    s.save();
    return 0;
  };

  auto* c_append = command("append", "Append bytes to a file, creating it if absent");
  c_append->add_option("path", path)->required();
  c_append->add_option("data", data, "Literal bytes to append");
  c_append->add_option("--from", from, "Append the content of a local file");
  actions[c_append] = [&](Session& s) {
    bool has_data = c_append->count("data") > 0;
    if (has_data == !from.empty())
      fail(Errc::invalid_argument, "append takes either literal data or --from FILE");
    Bytes bytes = from.empty() ? to_bytes(data) : read_file(from);
    auto [dir, leaf] = parent_of(*s.root(), path, false);
    std::shared_ptr<FileObject> file =
        dir->contains(leaf) ? dir->child(leaf)->as_file() : dir->create_file(leaf);
    file->append(bytes);
    s.save();
    return 0;
  };

  std::string source;
  auto* c_store = command("store", "Copy a local file into the filesystem");
  c_store->add_option("source", source)->required();
  c_store->add_option("path", path)->required();
  actions[c_store] = [&](Session& s) {
    auto bytes = read_file(source);
    auto [dir, leaf] = parent_of(*s.root(), path, true);
    std::shared_ptr<FileObject> file =
        dir->contains(leaf) ? dir->child(leaf)->as_file() : dir->create_file(leaf);
    file->write(0, bytes);
    file->truncate(bytes.size());
    s.save();
    return 0;
  };

  std::size_t max_depth = 0;
  auto* c_history = command("history", "Print the revisions of an object");
  c_history->add_option("path", path)->required();
  c_history->add_option("--max", max_depth, "Stop after this many entries");
  actions[c_history] = [&](Session& s) {
    auto node = lookup_path(*s.root(), path);
    auto h = node->history(max_depth ? std::optional<std::size_t>(max_depth) : std::nullopt);
    for (std::size_t i = 0; i < h.entries.size(); ++i) {
      const auto& e = h.entries[i];
      out << i << " " << e.ref.name.to_text();
      if (e.version) out << " size=" << e.version->size;
      else out << " (name only)";
      out << "\n";
    }
    if (h.truncated) out << "...\n";
    if (h.broken_at) {
      err << "history broken at " << h.broken_at->to_text() << ": " << h.error << "\n";
      return 4;
    }
    return 0;
  };

  auto* c_name = command("name", "Print an object's name and encoded pointer");
  c_name->add_option("path", path)->required();
  actions[c_name] = [&](Session& s) {
    auto snap = lookup_path(*s.root(), path)->snapshot();
    out << snap.name << "\n" << snap.pointer_hex << "\n";
    return 0;
  };

  auto* c_names = command("names", "List the encoded pointers of a directory's entries");
  c_names->add_option("path", path);
  actions[c_names] = [&](Session& s) {
    auto node = lookup_path(*s.root(), path);
    if (node->kind() != ObjectKind::directory) {
      out << node->snapshot().pointer_hex << " " << split_path(path).back() << "\n";
      return 0;
    }
    auto dir = node->as_directory();
    dir->persist();
    for (const auto& [name, entry] : dir->entries())
      out << pointer_to_hex(*entry.pointer) << " " << name << (entry.kind == ObjectKind::directory ? "/" : "")
          << "\n";
    return 0;
  };

  std::string target;
  auto* c_get = command("get", "Print content by path or encoded pointer");
  c_get->add_option("target", target)->required();
  actions[c_get] = [&](Session& s) {
    NodePtr node;
    if (auto ptr = as_pointer(target))
      node = open_object(s.ctx(), *ptr);
    else
      node = lookup_path(*s.root(), target);
    if (node->kind() == ObjectKind::directory)
      list_directory(out, *node->as_directory());
    else
      write_bytes(out, node->as_file()->read_all());
    return 0;
  };

  auto* c_getpath = command("get-path", "Find the paths holding an encoded pointer");
  c_getpath->add_option("pointer", target)->required();
  actions[c_getpath] = [&](Session& s) {
    auto ptr = as_pointer(target);
    if (!ptr) fail(Errc::invalid_argument, "not an encoded pointer");
    auto root = s.root();
    std::vector<std::string> found;
    if (root->persist().name == ptr->name) found.push_back("/");
    find_paths(*root, "", *ptr, found);
    if (found.empty()) fail(Errc::not_found, "pointer not reachable from the root");
    for (const auto& p : found) out << p << "\n";
    return 0;
  };

  std::uint64_t start = 0, end = 0;
  std::string dest;
  auto* c_redact = command("redact", "Blind the blocks covering [start, end] of a file");
  c_redact->add_option("path", path)->required();
  c_redact->add_option("start", start)->required();
  c_redact->add_option("end", end)->required();
  c_redact->add_option("--to", dest, "Also link the redacted file at this path");
  actions[c_redact] = [&](Session& s) {
    auto redacted = lookup_path(*s.root(), path)->as_file()->redact(start, end);
    auto ptr = redacted->persist();
    if (!dest.empty()) {
      auto [dir, leaf] = parent_of(*s.root(), dest, true);
      dir->link(leaf, ObjectKind::file, ptr);
      s.save();
    }
    out << ptr.name.to_text() << "\n" << pointer_to_hex(ptr) << "\n";
    return 0;
  };

  auto* c_diff = command("diff", "Compare two files (paths or pointers)");
  c_diff->add_option("a", target)->required();
  c_diff->add_option("b", path2)->required();
  actions[c_diff] = [&](Session& s) {
    auto resolve = [&](const std::string& t) {
      if (auto ptr = as_pointer(t)) return FileObject::open(s.ctx(), *ptr);
      return lookup_path(*s.root(), t)->as_file();
    };
    auto a = resolve(target);
    auto b = resolve(path2);
    out << render_diff(diff(*a, *b));
    return 0;
  };

  std::size_t history_depth = 0;
  bool full_history = false;
  auto* c_verify = command("verify", "Check every reachable block");
  c_verify->add_option("target", target, "Path or encoded pointer (default: root)");
  c_verify->add_option("--history", history_depth, "Follow prev links this many hops");
  c_verify->add_flag("--full-history", full_history, "Follow every prev link");
  actions[c_verify] = [&](Session& s) {
    BlockPointer ptr;
    if (auto p = as_pointer(target)) ptr = *p;
    else ptr = lookup_path(*s.root(), target.empty() ? "/" : target)->persist();
    std::optional<std::size_t> depth;
    if (!full_history) depth = history_depth;
    auto report = verify_tree(BlockReference::full(ptr), *s.store(), depth);
    for (const auto& issue : report.issues) {
      static const char* kinds[] = {"missing", "corrupt", "malformed", "io"};
      out << kinds[static_cast<int>(issue.kind)] << " " << issue.name.to_text() << " " << issue.detail << "\n";
    }
    out << "checked " << report.blocks_checked << " blocks, " << report.issues.size() << " issues\n";
    return report.ok() ? 0 : 4;
  };

  std::string listen = "127.0.0.1:7070", head_file;
  auto* c_serve = command("serve", "Serve the configured store (and optionally a repository)");
  c_serve->add_option("--listen", listen);
  c_serve->add_option("--repo-head", head_file, "Enable the repository service with this head file");
  actions[c_serve] = [&](Session& s) {
    std::vector<net::Handler> handlers{net::make_store_handler(s.store())};
    if (!head_file.empty())
      handlers.push_back(uvc::make_repository_handler(std::make_shared<uvc::Repository>(s.store(), head_file)));
    net::Server server(net::Endpoint::parse(listen), std::move(handlers));
    std::cerr << "listening on " << server.endpoint().to_string() << std::endl;
    wait_for_signal();
    server.stop();
    return 0;
  };

  auto* c_uvc = command("uvc", "Private version control");
  c_uvc->require_subcommand(1);
  std::string repo, worktree, message = "update";
  bool rebase = false;
  auto* u_commit = c_uvc->add_subcommand("commit", "Add a worktree, commit and push");
  u_commit->add_option("repo", repo)->required();
  u_commit->add_option("worktree", worktree)->required();
  u_commit->add_option("-m,--message", message);
  u_commit->add_flag("--rebase", rebase, "On rejection, rebase onto the new head and retry once");
  actions[u_commit] = [&](Session& s) {
    uvc::Workspace ws(s.ctx(), net::Endpoint::parse(repo));
    auto stats = ws.add(worktree);
    for (const auto& e : stats.errors) err << "skipped " << e << "\n";
    ws.commit(message);
    auto res = ws.push();
    if (!res.accepted && rebase) {
      ws.rebase(worktree);
      ws.commit(message);
      res = ws.push();
    }
    if (!res.accepted) {
      err << "rejected: " << res.reason << "\n";
      if (res.head) err << "head: " << pointer_to_hex(*res.head) << "\n";
      return 4;
    }
    out << pointer_to_hex(*res.head) << "\n";
    return 0;
  };
  auto* u_clone = c_uvc->add_subcommand("clone", "Materialize the repository head");
  u_clone->add_option("repo", repo)->required();
  u_clone->add_option("dest", dest)->required();
  actions[u_clone] = [&](Session& s) {
    auto head = uvc::clone(s.ctx(), net::Endpoint::parse(repo), dest);
    out << pointer_to_hex(head) << "\n";
    return 0;
  };
  auto* u_log = c_uvc->add_subcommand("log", "List accepted versions, newest first");
  u_log->add_option("repo", repo)->required();
  actions[u_log] = [&](Session&) {
    for (const auto& ref : uvc::log(net::Endpoint::parse(repo))) out << ref.name.to_text() << "\n";
    return 0;
  };

  std::string workload, csv;
  bench::BenchSpec spec;
  std::uint64_t sync_ms = 5000;
  auto* c_bench = command("bench", "Run a benchmark workload on the configured store");
  c_bench->add_option("workload", workload, "makedir | makefile | readfile | writefile | macro")->required();
  c_bench->add_option("--ops", spec.ops);
  c_bench->add_option("--io-size", spec.io_size);
  c_bench->add_option("--population", spec.population);
  c_bench->add_option("--seed", spec.seed);
  c_bench->add_option("--sync-ms", sync_ms);
  c_bench->add_option("--sync-ops", spec.sync.dirty_ops);
  c_bench->add_option("--csv", csv, "Write the time series here");
  actions[c_bench] = [&](Session& s) {
    spec.workload = bench::parse_workload(workload);
    spec.sync.interval = std::chrono::milliseconds(sync_ms);
    spec.padding = s.config().padding;
    auto store = s.store();
    auto result = bench::run(spec, store);
    out << bench::summary(spec, result);
    if (result.content_bytes && store->block_count()) {
      auto r = bench::storage_report(*store, result.content_bytes);
      out << "content_bytes=" << r.content_bytes << "\nstore_bytes=" << r.store_bytes << "\n";
    }
    if (!csv.empty()) {
      std::ofstream f(csv);
      f << bench::to_csv(result.series);
      if (!f) fail(Errc::io, "cannot write " + csv);
    }
    return 0;
  };

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    result.code = app.exit(e, out, err) == 0 ? 0 : 1;
    result.out = out.str();
    result.err = err.str();
    return result;
  }

  try {
    CliConfig cfg = config;
    if (!config_file.empty()) cfg = load_config(config_file, cfg);
    if (!vault_opt.empty()) cfg.vault = vault_opt;
    if (!store_opt.empty()) cfg.store = store_opt;
    if (!padding_opt.empty()) cfg.padding = parse_padding(padding_opt);

    CLI::App* chosen = app.get_subcommands().front();
    while (!chosen->get_subcommands().empty()) chosen = chosen->get_subcommands().front();
    Session session(cfg, store);
    result.code = actions.at(chosen)(session);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    result.code = exit_code(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    result.code = 4;
  }
  result.out = out.str();
  result.err = err.str();
  return result;
}

}  // namespace upss::cli
