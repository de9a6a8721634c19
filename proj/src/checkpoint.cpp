#include "curvssl/checkpoint.hpp"

#include <bit>
#include <charconv>
#include <fstream>
#include <sstream>

#include "curvssl/error.hpp"

namespace curvssl {

namespace {

constexpr std::string_view kMagic = "curvssl-checkpoint";

[[noreturn]] void malformed(const std::string& what) {
  throw Error(ErrorKind::FormatVersionMismatch, "malformed checkpoint: " + what);
}

std::string join(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::to_chars_result r = std::to_chars(buf, buf + 16, v, 16);
  const std::size_t len = static_cast<std::size_t>(r.ptr - buf);
  return std::string(16 - len, '0') + std::string(buf, len);
}

template <class T>
T parse_number(const std::string& token, const char* what, int base = 10) {
  T value{};
  const auto r = std::from_chars(token.data(), token.data() + token.size(), value, base);
  if (r.ec != std::errc() || r.ptr != token.data() + token.size()) malformed(std::string("bad ") + what + " '" + token + "'");
  return value;
}

std::vector<std::size_t> parse_widths(const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number<std::size_t>(item, "width"));
  return out;
}

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  std::string next(const char* expecting) {
    std::string line;
    if (!std::getline(in_, line)) malformed(std::string("truncated before ") + expecting);
    return line;
  }

  std::vector<std::string> tokens(const char* expecting) {
    std::istringstream ss(next(expecting));
    std::vector<std::string> out;
    for (std::string t; ss >> t;) out.push_back(t);
    return out;
  }

  // "<key> <value>" line.
  std::string field(const char* key) {
    const auto t = tokens(key);
    if (t.size() != 2 || t[0] != key) malformed(std::string("expected '") + key + " <value>'");
    return t[1];
  }

 private:
  std::istream& in_;
};

void write_tensor(std::ostream& os, const std::string& name, const Tensor& t) {
  os << "tensor " << name << ' ' << t.rows() << ' ' << t.cols() << '\n';
  for (std::size_t i = 0; i < t.size(); ++i) {
    os << encode_double(t[i]) << ((i % 8 == 7 || i + 1 == t.size()) ? '\n' : ' ');
  }
}

Tensor read_tensor(LineReader& r, const std::string& expected_name) {
  const auto head = r.tokens("tensor header");
  if (head.size() != 4 || head[0] != "tensor") malformed("expected tensor header");
  if (head[1] != expected_name) malformed("expected tensor " + expected_name + ", found " + head[1]);
  const auto rows = parse_number<std::size_t>(head[2], "rows");
  const auto cols = parse_number<std::size_t>(head[3], "cols");
  std::vector<double> data;
  data.reserve(rows * cols);
  while (data.size() < rows * cols) {
    const auto values = r.tokens("tensor values");
    if (values.empty() || data.size() + values.size() > rows * cols) malformed("tensor " + expected_name + " value count");
    for (const auto& v : values) data.push_back(decode_double(v));
  }
  return Tensor({rows, cols}, std::move(data));
}

}  // namespace

std::uint64_t config_digest(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string encode_double(double v) { return hex64(std::bit_cast<std::uint64_t>(v)); }

double decode_double(std::string_view hex) {
  if (hex.size() != 16) malformed("value '" + std::string(hex) + "' is not 16 hex digits");
  return std::bit_cast<double>(parse_number<std::uint64_t>(std::string(hex), "hex value", 16));
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  ckpt.parameters.validate(ckpt.architecture);
  std::ostringstream os;
  const Provenance& p = ckpt.provenance;
  const Architecture& a = ckpt.architecture;
  os << kMagic << ' ' << kCheckpointFormatVersion << '\n';
  os << "architecture " << a.input_dim << " encoder " << join(a.encoder_widths) << " projector "
     << join(a.projector_widths) << " activation relu\n";
  os << "seed " << p.seed << '\n';
  os << "epochs " << p.epochs_completed << '\n';
  os << "config_digest " << hex64(config_digest(p.config_text)) << '\n';
  std::vector<std::string> config_lines;
  {
    std::istringstream cs(p.config_text);
    for (std::string line; std::getline(cs, line);) config_lines.push_back(line);
  }
  if (!p.config_text.empty() && p.config_text.back() != '\n') {
    throw Error(ErrorKind::InvalidArgument, "config text must end with a newline");
  }
  os << "config " << config_lines.size() << '\n';
  for (const auto& line : config_lines) os << line << '\n';
  os << "weights " << encode_double(p.weights.lambda_emb) << ' ' << encode_double(p.weights.lambda_curv) << ' '
     << encode_double(p.weights.alpha_curv) << '\n';
  os << "history " << p.loss_history.size() << '\n';
  for (std::size_t e = 0; e < p.loss_history.size(); ++e) {
    const LossBreakdown& h = p.loss_history[e];
    os << e + 1 << ' ' << encode_double(h.total) << ' ' << encode_double(h.emb_diag) << ' '
       << encode_double(h.emb_offdiag) << ' ' << encode_double(h.curv_diag) << ' ' << encode_double(h.curv_offdiag)
       << '\n';
  }
  const std::size_t count = 2 * (ckpt.parameters.encoder.size() + ckpt.parameters.projector.size());
  os << "tensors " << count << '\n';
  for (const auto* stack : {&ckpt.parameters.encoder, &ckpt.parameters.projector}) {
    for (const Layer& l : *stack) {
      write_tensor(os, l.name + ".weight", l.weight);
      write_tensor(os, l.name + ".bias", l.bias);
    }
  }
  os << "end\n";

  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::IoFailure, "cannot write " + tmp.string());
    const std::string body = os.str();
    out.write(body.data(), static_cast<std::streamsize>(body.size()));
    out.flush();
    if (!out) throw Error(ErrorKind::IoFailure, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorKind::IoFailure, "cannot move checkpoint into " + path.string() + ": " + ec.message());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoFailure, "cannot read " + path.string());
  LineReader r(in);

  const auto head = r.tokens("header");
  if (head.size() != 2 || head[0] != kMagic) {
    throw Error(ErrorKind::FormatVersionMismatch, path.string() + " is not a curvssl checkpoint");
  }
  if (head[1] != std::to_string(kCheckpointFormatVersion)) {
    throw Error(ErrorKind::FormatVersionMismatch, "checkpoint version " + head[1] + ", expected " +
                                                      std::to_string(kCheckpointFormatVersion));
  }

  Checkpoint ckpt;
  const auto arch = r.tokens("architecture");
  if (arch.size() != 8 || arch[0] != "architecture" || arch[2] != "encoder" || arch[4] != "projector" ||
      arch[6] != "activation" || arch[7] != "relu") {
    malformed("architecture line");
  }
  ckpt.architecture.input_dim = parse_number<std::size_t>(arch[1], "input_dim");
  ckpt.architecture.encoder_widths = parse_widths(arch[3]);
  ckpt.architecture.projector_widths = parse_widths(arch[5]);

  Provenance& p = ckpt.provenance;
  p.seed = parse_number<std::uint64_t>(r.field("seed"), "seed");
  p.epochs_completed = parse_number<std::size_t>(r.field("epochs"), "epochs");
  const auto digest = parse_number<std::uint64_t>(r.field("config_digest"), "digest", 16);
  const auto config_lines = parse_number<std::size_t>(r.field("config"), "config line count");
  for (std::size_t i = 0; i < config_lines; ++i) p.config_text += r.next("config body") + '\n';
  if (config_digest(p.config_text) != digest) {
    throw Error(ErrorKind::DigestMismatch, "config block does not match its recorded digest");
  }

  const auto w = r.tokens("weights");
  if (w.size() != 4 || w[0] != "weights") malformed("weights line");
  p.weights = {decode_double(w[1]), decode_double(w[2]), decode_double(w[3])};

  const auto rows = parse_number<std::size_t>(r.field("history"), "history length");
  for (std::size_t e = 0; e < rows; ++e) {
    const auto t = r.tokens("history row");
    if (t.size() != 6 || t[0] != std::to_string(e + 1)) malformed("history row " + std::to_string(e + 1));
    p.loss_history.push_back({decode_double(t[1]), decode_double(t[2]), decode_double(t[3]), decode_double(t[4]),
                              decode_double(t[5]), p.weights});
  }

  const auto count = parse_number<std::size_t>(r.field("tensors"), "tensor count");
  const std::size_t expected = 2 * (ckpt.architecture.encoder_widths.size() + ckpt.architecture.projector_widths.size());
  if (count != expected) malformed("tensor count " + std::to_string(count) + ", expected " + std::to_string(expected));
  auto read_stack = [&](std::size_t layers, const std::string& prefix) {
    std::vector<Layer> out;
    for (std::size_t l = 0; l < layers; ++l) {
      const std::string name = prefix + "." + std::to_string(l);
      Tensor weight = read_tensor(r, name + ".weight");
      Tensor bias = read_tensor(r, name + ".bias");
      out.push_back({name, std::move(weight), std::move(bias)});
    }
    return out;
  };
  ckpt.parameters.encoder = read_stack(ckpt.architecture.encoder_widths.size(), "encoder");
  ckpt.parameters.projector = read_stack(ckpt.architecture.projector_widths.size(), "projector");
  if (r.next("end marker") != "end") malformed("missing end marker");

  try {
    ckpt.parameters.validate(ckpt.architecture);
  } catch (const Error& e) {
    malformed(e.what());
  }
  return ckpt;
}

}  // namespace curvssl
