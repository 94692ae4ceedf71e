#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "cfgevade/error.hpp"
#include "cfgevade/graph.hpp"
#include "cfgevade/rng.hpp"

namespace cfgevade {

inline constexpr const char* kEntryName = "entry0";

// Shared runtime/utility calls seen in both goodware and malware.
inline std::vector<std::string> default_common_pool() {
  return {
      "sym.imp.KERNEL32.dll_GetStartupInfoA",  "sym.imp.KERNEL32.dll_GetModuleHandleA",
      "sym.imp.MSVCRT.dll__set_app_type",      "sym.imp.MSVCRT.dll___p__fmode",
      "sym.imp.MSVCRT.dll___p__commode",       "sym.imp.MSVCRT.dll___setusermatherr",
      "sym.imp.MSVCRT.dll___getmainargs",      "sym.imp.MSVCRT.dll_exit",
      "sym.imp.MSVCRT.dll_malloc",             "sym.imp.MSVCRT.dll_free",
      "sym.imp.MSVCRT.dll_memset",             "sym.imp.MSVCRT.dll_memcpy",
      "sym.imp.MSVCRT.dll_strlen",             "sym.imp.MSVCRT.dll_printf",
      "sym.imp.KERNEL32.dll_GetLastError",     "sym.imp.KERNEL32.dll_CloseHandle",
      "sym.imp.KERNEL32.dll_GetProcAddress",   "sym.imp.KERNEL32.dll_LoadLibraryA",
      "sym.imp.KERNEL32.dll_ExitProcess",      "sym.imp.KERNEL32.dll_GetCommandLineA",
      "sym.imp.KERNEL32.dll_HeapAlloc",        "sym.imp.KERNEL32.dll_HeapFree",
      "sym.imp.KERNEL32.dll_GetProcessHeap",   "sym.imp.KERNEL32.dll_Sleep",
      "sym.imp.KERNEL32.dll_GetTickCount",     "sym.imp.KERNEL32.dll_QueryPerformanceCounter",
      "sym.imp.KERNEL32.dll_GetCurrentProcessId", "sym.imp.KERNEL32.dll_GetCurrentThreadId",
      "sym.imp.KERNEL32.dll_GetSystemTimeAsFileTime", "sym.imp.KERNEL32.dll_SetUnhandledExceptionFilter",
      "sym.imp.KERNEL32.dll_InitializeCriticalSection", "sym.imp.KERNEL32.dll_EnterCriticalSection",
      "sym.imp.KERNEL32.dll_LeaveCriticalSection", "sym.imp.KERNEL32.dll_TlsGetValue",
      "sym.imp.KERNEL32.dll_MultiByteToWideChar", "sym.imp.KERNEL32.dll_WideCharToMultiByte",
      "fcn.00401000", "fcn.00401010", "fcn.00401050", "fcn.004010a0",
  };
}

inline std::vector<std::string> default_benign_pool() {
  return {
      "sym.imp.USER32.dll_CreateWindowExA",    "sym.imp.USER32.dll_ShowWindow",
      "sym.imp.USER32.dll_UpdateWindow",       "sym.imp.USER32.dll_GetMessageA",
      "sym.imp.USER32.dll_TranslateMessage",   "sym.imp.USER32.dll_DispatchMessageA",
      "sym.imp.USER32.dll_DefWindowProcA",     "sym.imp.USER32.dll_RegisterClassExA",
      "sym.imp.USER32.dll_LoadIconA",          "sym.imp.USER32.dll_LoadCursorA",
      "sym.imp.USER32.dll_MessageBoxA",        "sym.imp.USER32.dll_PostQuitMessage",
      "sym.imp.GDI32.dll_CreateFontA",         "sym.imp.GDI32.dll_SelectObject",
      "sym.imp.GDI32.dll_DeleteObject",        "sym.imp.GDI32.dll_TextOutA",
      "sym.imp.GDI32.dll_BitBlt",              "sym.imp.GDI32.dll_CreateCompatibleDC",
      "sym.imp.COMCTL32.dll_InitCommonControlsEx", "sym.imp.COMDLG32.dll_GetOpenFileNameA",
      "sym.imp.SHELL32.dll_SHGetFolderPathA",  "sym.imp.OLE32.dll_CoInitialize",
      "sym.imp.OLE32.dll_CoUninitialize",      "sym.imp.OLE32.dll_CoCreateInstance",
      "sym.imp.VERSION.dll_GetFileVersionInfoA", "sym.imp.KERNEL32.dll_GetLocaleInfoA",
      "sym.imp.KERNEL32.dll_FormatMessageA",   "sym.imp.KERNEL32.dll_GetUserDefaultLCID",
      "sym.imp.MSVCRT.dll_setlocale",          "sym.imp.MSVCRT.dll_qsort",
      "sym.imp.MSVCRT.dll_fopen",              "sym.imp.MSVCRT.dll_fclose",
      "sym.imp.MSVCRT.dll_fprintf",            "sym.imp.MSVCRT.dll_strftime",
      "fcn.00402200", "fcn.00402340", "fcn.004024f0", "fcn.00402610",
      "fcn.00402780", "fcn.004028c0",
  };
}

inline std::vector<std::string> default_malicious_pool() {
  return {
      "sym.imp.KERNEL32.dll_VirtualAllocEx",   "sym.imp.KERNEL32.dll_WriteProcessMemory",
      "sym.imp.KERNEL32.dll_CreateRemoteThread", "sym.imp.KERNEL32.dll_OpenProcess",
      "sym.imp.KERNEL32.dll_VirtualProtect",   "sym.imp.KERNEL32.dll_CreateToolhelp32Snapshot",
      "sym.imp.KERNEL32.dll_Process32First",   "sym.imp.KERNEL32.dll_Process32Next",
      "sym.imp.KERNEL32.dll_IsDebuggerPresent", "sym.imp.KERNEL32.dll_WinExec",
      "sym.imp.KERNEL32.dll_CreateMutexA",     "sym.imp.KERNEL32.dll_ResumeThread",
      "sym.imp.KERNEL32.dll_SetThreadContext", "sym.imp.KERNEL32.dll_GetThreadContext",
      "sym.imp.ADVAPI32.dll_RegSetValueExA",   "sym.imp.ADVAPI32.dll_RegCreateKeyExA",
      "sym.imp.ADVAPI32.dll_OpenProcessToken", "sym.imp.ADVAPI32.dll_AdjustTokenPrivileges",
      "sym.imp.ADVAPI32.dll_CryptEncrypt",     "sym.imp.ADVAPI32.dll_CryptAcquireContextA",
      "sym.imp.ADVAPI32.dll_CreateServiceA",   "sym.imp.ADVAPI32.dll_StartServiceA",
      "sym.imp.WININET.dll_InternetOpenA",     "sym.imp.WININET.dll_InternetOpenUrlA",
      "sym.imp.WININET.dll_InternetReadFile",  "sym.imp.WS2_32.dll_connect",
      "sym.imp.WS2_32.dll_send",               "sym.imp.WS2_32.dll_recv",
      "sym.imp.URLMON.dll_URLDownloadToFileA", "sym.imp.NTDLL.dll_NtUnmapViewOfSection",
      "sym.imp.USER32.dll_SetWindowsHookExA",  "sym.imp.USER32.dll_GetAsyncKeyState",
      "sym.imp.SHELL32.dll_ShellExecuteA",     "sym.imp.KERNEL32.dll_DeleteFileA",
      "fcn.0040a1c0", "fcn.0040a5c0", "fcn.0040b020", "fcn.0040b1f0",
      "fcn.0040b3a8", "fcn.0040c010",
  };
}

// Parameters of the synthetic labeled corpus. Each non-entry node draws its
// name from the label's own pool with probability `signal_strength`, otherwise
// from the shared pool.
struct CorpusConfig {
  std::size_t n_benign = 100;
  std::size_t n_malicious = 100;
  std::size_t min_nodes = 8;
  std::size_t max_nodes = 24;
  double edge_density = 0.1;
  std::vector<std::string> benign_pool = default_benign_pool();
  std::vector<std::string> malicious_pool = default_malicious_pool();
  std::vector<std::string> common_pool = default_common_pool();
  double signal_strength = 0.6;
  // Share of non-specific nodes given a binary-specific name instead of a
  // common-pool one: an internal "fcn.<addr>" or an import from an uncommon
  // DLL, with equal odds for both classes. These names are mostly too rare
  // for whole-word vocab entries, so they train the sub-word fallback.
  double tail_rate = 0.3;
  double tail_import_share = 0.5;
  std::uint64_t seed = 0;

  void validate() const {
    if (min_nodes < 1 || min_nodes > max_nodes) {
      throw ConfigError("node-count range must satisfy 1 <= min <= max");
    }
    if (!(edge_density >= 0.0 && edge_density <= 1.0)) {
      throw ConfigError("edge density must lie in [0, 1]");
    }
    if (!(signal_strength >= 0.0 && signal_strength <= 1.0)) {
      throw ConfigError("signal strength must lie in [0, 1]");
    }
    for (const double r : {tail_rate, tail_import_share}) {
      if (!(r >= 0.0 && r <= 1.0)) throw ConfigError("tail rates must lie in [0, 1]");
    }
    if (signal_strength > 0.0) {
      if (n_benign > 0 && benign_pool.empty()) throw ConfigError("benign pool is empty");
      if (n_malicious > 0 && malicious_pool.empty()) throw ConfigError("malicious pool is empty");
    }
    if (signal_strength < 1.0 && common_pool.empty() && max_nodes > 1) {
      throw ConfigError("common pool is empty");
    }
    std::set<std::string> seen;
    for (const auto* pool : {&benign_pool, &malicious_pool, &common_pool}) {
      std::set<std::string> local;
      for (const auto& name : *pool) {
        if (!is_valid_function_name(name)) {
          throw ConfigError("pool name '" + name + "' is empty or contains whitespace");
        }
        if (name == kEntryName) throw ConfigError("pools may not contain the entry name");
        if (!local.insert(name).second) throw ConfigError("duplicate pool name '" + name + "'");
        if (!seen.insert(name).second) throw ConfigError("pools are not disjoint: '" + name + "'");
      }
    }
    std::size_t smallest_own = std::max(benign_pool.size(), malicious_pool.size());
    if (n_benign > 0) smallest_own = std::min(smallest_own, benign_pool.size());
    if (n_malicious > 0) smallest_own = std::min(smallest_own, malicious_pool.size());
    const std::size_t available = common_pool.size() + smallest_own;
    if (max_nodes > 1 && available < max_nodes - 1) {
      throw ConfigError("pools too small for the requested node count");
    }
  }
};

namespace detail {

inline std::string sample_name(Label label, std::size_t index) {
  std::ostringstream os;
  os << to_string(label) << '_';
  os.width(5);
  os.fill('0');
  os << index;
  return os.str();
}

// "fcn.<8 hex digits>" at a text-section address.
inline std::string tail_internal_name(Rng& rng) {
  std::ostringstream os;
  os << "fcn." << std::hex;
  os.width(8);
  os.fill('0');
  os << (0x00401000u + rng.below(0x000ff000u));
  return os.str();
}

// "sym.imp.<DLL>.dll_<Func>" with a made-up vendor DLL and CamelCase export.
inline std::string tail_import_name(Rng& rng) {
  static constexpr std::string_view kUpper = "ABCDEFGHIJKLMNOPQRSTUVWXYZ";
  static constexpr std::string_view kDllChars = "ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
  static constexpr std::string_view kLower = "abcdefghijklmnopqrstuvwxyz";
  std::string s = "sym.imp.";
  s += kUpper[rng.below(kUpper.size())];
  for (auto k = rng.between(2, 9); k > 0; --k) s += kDllChars[rng.below(kDllChars.size())];
  s += ".dll_";
  for (auto parts = rng.between(1, 3); parts > 0; --parts) {
    s += kUpper[rng.below(kUpper.size())];
    for (auto k = rng.between(2, 7); k > 0; --k) s += kLower[rng.below(kLower.size())];
  }
  return s;
}

inline ControlFlowGraph synth_graph(const CorpusConfig& cfg, Label label, std::size_t index,
                                    std::uint64_t stream_seed) {
  Rng rng(stream_seed);
  const auto& own_pool = label == Label::Malicious ? cfg.malicious_pool : cfg.benign_pool;

  ControlFlowGraph g;
  g.name = sample_name(label, index);
  g.label = label;
  g.entry = 0;
  const auto n = static_cast<std::size_t>(
      rng.between(static_cast<std::int64_t>(cfg.min_nodes), static_cast<std::int64_t>(cfg.max_nodes)));
  g.nodes.push_back({0, kEntryName});

  // Names are distinct within a graph; a pool that runs dry hands over to the
  // other one.
  std::unordered_set<std::string> used;
  auto draw_from = [&](const std::vector<std::string>& pool) -> const std::string* {
    std::size_t unused = 0;
    for (const auto& s : pool) unused += used.contains(s) ? 0 : 1;
    if (unused == 0) return nullptr;
    while (true) {
      const auto& s = pool[rng.below(pool.size())];
      if (!used.contains(s)) return &s;
    }
  };
  for (std::size_t i = 1; i < n; ++i) {
    const bool specific = rng.bernoulli(cfg.signal_strength);
    if (!specific && rng.bernoulli(cfg.tail_rate)) {
      std::string tail;
      do {
        tail = rng.bernoulli(cfg.tail_import_share) ? tail_import_name(rng) : tail_internal_name(rng);
      } while (used.contains(tail));
      used.insert(tail);
      g.nodes.push_back({i, tail});
      continue;
    }
    const auto* name = draw_from(specific ? own_pool : cfg.common_pool);
    if (name == nullptr) name = draw_from(specific ? cfg.common_pool : own_pool);
    if (name == nullptr) throw ConfigError("ran out of distinct names for graph " + g.name);
    used.insert(*name);
    g.nodes.push_back({i, *name});
  }

  // Random DAG over node indices; every node gets one earlier parent so the
  // whole graph is reachable from the entry, then extra forward edges.
  std::set<CfgEdge> edges;
  for (NodeId i = 1; i < n; ++i) edges.emplace(rng.below(i), i);
  for (NodeId i = 0; i < n; ++i) {
    for (NodeId j = i + 1; j < n; ++j) {
      if (rng.bernoulli(cfg.edge_density)) edges.emplace(i, j);
    }
  }
  g.edges.assign(edges.begin(), edges.end());
  return g;
}

}  // namespace detail

// Deterministic synthetic corpus: benign graphs first, then malicious. Graph k
// uses its own RNG stream derived from (seed, k), so generation order does
// not matter.
inline std::vector<ControlFlowGraph> synth_corpus(const CorpusConfig& cfg) {
  cfg.validate();
  std::vector<ControlFlowGraph> out;
  out.reserve(cfg.n_benign + cfg.n_malicious);
  for (std::size_t k = 0; k < cfg.n_benign + cfg.n_malicious; ++k) {
    const bool malicious = k >= cfg.n_benign;
    const std::size_t local = malicious ? k - cfg.n_benign : k;
    out.push_back(detail::synth_graph(cfg, malicious ? Label::Malicious : Label::Benign, local,
                                      derive_seed(cfg.seed, "corpus.graph", k)));
  }
  return out;
}

inline std::vector<FunctionSequence> linearize_all(const std::vector<ControlFlowGraph>& graphs,
                                                   std::size_t max_calls) {
  std::vector<FunctionSequence> out;
  out.reserve(graphs.size());
  for (const auto& g : graphs) out.push_back(dfs_linearize(g, max_calls));
  return out;
}

// Occurrence counts across all sequences, by count descending then name.
inline std::vector<std::pair<std::string, std::size_t>> function_frequency(
    const std::vector<FunctionSequence>& corpus) {
  std::map<std::string, std::size_t> counts;
  for (const auto& seq : corpus) {
    for (const auto& call : seq.calls) ++counts[call];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  return ranked;
}

struct TrainEvalSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> eval;
};

// Seeded shuffled split; `train_fraction` of the items (rounded) go to train.
inline TrainEvalSplit split_indices(std::size_t n, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("train fraction must lie in (0, 1)");
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(derive_seed(seed, "split"));
  rng.shuffle(order);
  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
  TrainEvalSplit split;
  split.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.eval.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.eval.begin(), split.eval.end());
  return split;
}

// ---- corpus directory layout: <dir>/benign/*.cfg.json, <dir>/malicious/*.cfg.json

inline constexpr const char* kCfgExtension = ".cfg.json";

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << contents;
  if (!out) throw DataError("write failed for " + path.string());
}

inline void write_corpus(const std::filesystem::path& dir,
                         const std::vector<ControlFlowGraph>& graphs) {
  for (const auto& g : graphs) {
    if (!g.label) throw SchemaViolation("corpus graph '" + g.name + "' is unlabeled");
    write_file(dir / std::string(to_string(*g.label)) / (g.name + kCfgExtension), serialize_cfg(g));
  }
}

// Loads benign/ then malicious/, each sorted by file name. The directory sets
// the label when the file itself carries none.
inline std::vector<ControlFlowGraph> load_corpus(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw DataError("corpus directory " + dir.string() + " does not exist");
  }
  std::vector<ControlFlowGraph> out;
  for (const Label label : {Label::Benign, Label::Malicious}) {
    const auto sub = dir / std::string(to_string(label));
    if (!std::filesystem::is_directory(sub)) continue;
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(sub)) {
      const auto name = entry.path().filename().string();
      if (entry.is_regular_file() && name.ends_with(kCfgExtension)) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      ControlFlowGraph g;
      try {
        g = parse_cfg_json(read_file(f));
      } catch (const DataError& e) {
        throw DataError(f.string() + ": " + e.what());
      }
      if (!g.label) g.label = label;
      out.push_back(std::move(g));
    }
  }
  return out;
}

}  // namespace cfgevade
