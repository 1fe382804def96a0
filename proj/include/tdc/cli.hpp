#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tdc/codec.hpp"

namespace tdc::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kIoFormat = 3,
  kUnreachable = 4,
};

struct EncodeConfig {
  std::filesystem::path input;
  std::filesystem::path output;
  EncodeOptions options;
};

inline std::string format_snr(double snr) {
  if (is_lossless_snr(snr)) return "lossless";
  std::ostringstream s;
  s << std::fixed << std::setprecision(2) << snr;
  return s.str();
}

inline int cmd_encode(const EncodeConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    const MultichannelSignal sig = read_wav(cfg.input);
    if (sig.length() == 0) {
      err << "error: " << cfg.input.string() << " has no samples\n";
      return kIoFormat;
    }
    const EncodeResult res = encode(sig, cfg.options);
    write_file(cfg.output, res.bytes);
    const QualityReport rate = rate_report(res.bytes.size(), sig.sample_rate, sig.length());
    out << "atoms      " << res.total_atoms << " (" << std::fixed << std::setprecision(2)
        << static_cast<double>(res.total_atoms) /
               static_cast<double>((sig.length() + cfg.options.block_size - 1) / cfg.options.block_size)
        << " per block)\n";
    out << "pursuit    " << format_snr(res.pursuit_snr_db) << " dB"
        << (res.pursuit_saturated ? " (saturated)" : "") << "\n";
    out << "delta      " << std::scientific << std::setprecision(6) << res.delta << "\n";
    out << "snr        " << format_snr(res.decoded_snr_db) << " dB\n";
    out << "bytes      " << res.bytes.size() << "\n";
    out << "kbps       " << std::fixed << std::setprecision(2) << rate.kbps << "\n";
    if (!res.target_reached) {
      err << "error: target SNR " << *cfg.options.target_snr_db
          << " dB unreachable; best achievable " << format_snr(res.decoded_snr_db) << " dB\n";
      return kUnreachable;
    }
    return kOk;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kIoFormat;
  }
}

inline int cmd_decode(const std::filesystem::path& input, const std::filesystem::path& output,
                      std::ostream& out, std::ostream& err) {
  try {
    const MultichannelSignal sig = decode_tdc(read_file(input));
    write_wav(output, sig);
    out << "decoded " << sig.length() << " samples x " << sig.channels() << " channels at "
        << sig.sample_rate << " Hz\n";
    return kOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kIoFormat;
  }
}

inline int cmd_info(const std::filesystem::path& input, std::ostream& out, std::ostream& err) {
  try {
    const auto bytes = read_file(input);
    const TdcHeader h = read_tdc_header(bytes);
    std::string payload_status = "ok";
    try {
      read_tdc(bytes);
    } catch (const TdcFormatError& e) {
      payload_status = e.what();
    }
    const auto& g = h.geometry;
    const QualityReport rate = rate_report(bytes.size(), g.sample_rate, g.length);
    out << "version       " << h.version << "\n";
    out << "sample_rate   " << g.sample_rate << "\n";
    out << "channels      " << g.channels << "\n";
    out << "length        " << g.length << "\n";
    out << "block_size    " << g.block_size << "\n";
    out << "half_size     " << g.half_size << "\n";
    out << "block_count   " << h.block_count << "\n";
    out << "total_atoms   " << h.total_atoms << "\n";
    out << "atoms/block   " << std::fixed << std::setprecision(3)
        << static_cast<double>(h.total_atoms) / h.block_count << "\n";
    out << "delta         " << std::scientific << std::setprecision(9) << h.delta << "\n";
    out << std::hex << std::setfill('0');
    out << "header_crc    " << std::setw(8) << h.header_checksum << "\n";
    out << "payload_crc   " << std::setw(8) << h.payload_checksum << "\n";
    out << std::dec << std::setfill(' ');
    for (std::size_t i = 0; i < h.streams.size(); ++i) {
      const auto& s = h.streams[i];
      std::string name = "st_ind";
      if (i >= 1 && i <= g.channels) name = "st_cf" + std::to_string(i);
      if (i > g.channels) name = "st_sg" + std::to_string(i - g.channels);
      out << "stream " << std::left << std::setw(7) << name << std::right
          << " alphabet " << s.alphabet_bound << " symbols " << s.symbol_count << " bytes "
          << s.byte_length << "\n";
    }
    out << "file_bytes    " << bytes.size() << "\n";
    out << "kbps          " << std::fixed << std::setprecision(2) << rate.kbps << "\n";
    out << "payload       " << payload_status << "\n";
    return kOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kIoFormat;
  }
}

struct CompareRow {
  std::string name;
  double snr_db = 0.0;
  std::uint64_t bytes = 0;
  double kbps = 0.0;
};

inline std::vector<CompareRow> compare(const MultichannelSignal& ref,
                                       const std::vector<std::filesystem::path>& candidates) {
  std::vector<CompareRow> rows;
  for (const auto& path : candidates) {
    const auto bytes = read_file(path);
    MultichannelSignal sig;
    if (path.extension() == ".tdc") {
      sig = decode_tdc(bytes);
      sig.samples = pcm16_rounded(sig.samples);
    } else {
      sig = parse_wav(bytes);
    }
    if (sig.length() != ref.length() || sig.channels() != ref.channels()) {
      throw std::invalid_argument(path.string() + ": length or channel count differs from reference");
    }
    CompareRow row;
    row.name = path.filename().string();
    row.snr_db = snr_db(ref, sig);
    row.bytes = bytes.size();
    row.kbps = rate_report(bytes.size(), ref.sample_rate, ref.length()).kbps;
    rows.push_back(row);
  }
  return rows;
}

inline void write_compare_csv(std::ostream& os, const std::vector<CompareRow>& rows) {
  os << "name,snr_db,bytes,kbps\n";
  for (const auto& r : rows) {
    os << r.name << ',' << std::fixed << std::setprecision(2) << std::min(r.snr_db, kSnrCapDb)
       << ',' << r.bytes << ',' << r.kbps << '\n';
  }
}

inline int cmd_compare(const std::filesystem::path& reference,
                       const std::vector<std::filesystem::path>& candidates,
                       const std::filesystem::path& csv, std::ostream& out, std::ostream& err) {
  std::vector<CompareRow> rows;
  MultichannelSignal ref;
  try {
    ref = read_wav(reference);
    rows = compare(ref, candidates);
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kIoFormat;
  }
  out << std::left << std::setw(32) << "name" << std::right << std::setw(12) << "snr_db"
      << std::setw(12) << "bytes" << std::setw(10) << "kbps" << "\n";
  for (const auto& r : rows) {
    out << std::left << std::setw(32) << r.name << std::right << std::setw(12) << format_snr(r.snr_db)
        << std::setw(12) << r.bytes << std::setw(10) << std::fixed << std::setprecision(2) << r.kbps
        << "\n";
  }
  if (!csv.empty()) {
    std::ofstream f(csv);
    if (!f) {
      err << "error: cannot create " << csv.string() << "\n";
      return kIoFormat;
    }
    write_compare_csv(f, rows);
  }
  return kOk;
}

/// Parses `args` (without the program name) and dispatches to a subcommand.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sparse trigonometric transform codec for multichannel audio", "tdc"};
  app.require_subcommand(1);

  EncodeConfig enc;
  double snr = 0.0;
  std::size_t atoms = 0;
  double delta = 0.0;
  std::string criterion = "oomp";
  auto* encode_cmd = app.add_subcommand("encode", "Encode a WAV file to .tdc");
  encode_cmd->add_option("--in", enc.input, "Input WAV")->required();
  encode_cmd->add_option("--out", enc.output, "Output .tdc")->required();
  auto* snr_opt = encode_cmd->add_option("--snr", snr, "Target SNR in dB after decoding");
  auto* atoms_opt = encode_cmd->add_option("--atoms", atoms, "Total atom budget K");
  snr_opt->excludes(atoms_opt);
  auto* delta_opt = encode_cmd->add_option("--delta", delta, "Quantization step")
                        ->check(CLI::PositiveNumber);
  encode_cmd->add_option("--block", enc.options.block_size, "Block size N_b")
      ->check(CLI::Range(2, 1 << 20));
  encode_cmd->add_option("--redundancy", enc.options.redundancy, "Dictionary redundancy 2M/N_b")
      ->check(CLI::Range(2, 64));
  encode_cmd->add_option("--criterion", criterion, "Atom selection criterion")
      ->check(CLI::IsMember({"oomp", "omp", "somp"}));
  encode_cmd->add_option("--overshoot", enc.options.overshoot_db,
                         "Pursuit SNR margin above target before quantization (dB)");
  encode_cmd->add_option("--threads", enc.options.threads, "Worker threads")
      ->check(CLI::Range(1, 256));

  std::filesystem::path dec_in, dec_out;
  auto* decode_cmd = app.add_subcommand("decode", "Decode a .tdc file to 16-bit WAV");
  decode_cmd->add_option("--in", dec_in, "Input .tdc")->required();
  decode_cmd->add_option("--out", dec_out, "Output WAV")->required();

  std::filesystem::path info_in;
  auto* info_cmd = app.add_subcommand("info", "Print container header");
  info_cmd->add_option("file", info_in, ".tdc file")->required();

  std::filesystem::path ref;
  std::vector<std::filesystem::path> candidates;
  std::filesystem::path csv;
  auto* compare_cmd = app.add_subcommand("compare", "SNR / size / rate table against a reference");
  compare_cmd->add_option("--ref", ref, "Reference WAV")->required();
  compare_cmd->add_option("candidates", candidates, "Decoded WAV or .tdc files")->required();
  compare_cmd->add_option("--csv", csv, "Also write CSV here");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n" << app.help();
    return kUsage;
  }

  if (encode_cmd->parsed()) {
    if (snr_opt->count() == 0 && atoms_opt->count() == 0) {
      err << "usage error: encode needs --snr or --atoms\n";
      return kUsage;
    }
    if (snr_opt->count()) enc.options.target_snr_db = snr;
    if (atoms_opt->count()) enc.options.atoms = atoms;
    if (delta_opt->count()) enc.options.delta = delta;
    enc.options.criterion = parse_criterion(criterion);
    return cmd_encode(enc, out, err);
  }
  if (decode_cmd->parsed()) return cmd_decode(dec_in, dec_out, out, err);
  if (info_cmd->parsed()) return cmd_info(info_in, out, err);
  if (compare_cmd->parsed()) return cmd_compare(ref, candidates, csv, out, err);
  return kUsage;
}

}  // namespace tdc::cli
