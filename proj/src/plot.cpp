#include "pcov/plot.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <set>
#include <sstream>

#include "pcov/error.hpp"
#include "pcov/serialize.hpp"

namespace pcov {

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  out += static_cast<char>((v >> 24) & 0xFF);
  out += static_cast<char>((v >> 16) & 0xFF);
  out += static_cast<char>((v >> 8) & 0xFF);
  out += static_cast<char>(v & 0xFF);
}

void put_chunk(std::string& out, const char* type, const std::string& payload) {
  put_u32(out, static_cast<std::uint32_t>(payload.size()));
  std::string body(type, 4);
  body += payload;
  out += body;
  const auto crc = crc32(0L, reinterpret_cast<const Bytef*>(body.data()),
                         static_cast<uInt>(body.size()));
  put_u32(out, static_cast<std::uint32_t>(crc));
}

std::array<int, 3> parse_hex(const std::string& hex) {
  return {std::stoi(hex.substr(1, 2), nullptr, 16), std::stoi(hex.substr(3, 2), nullptr, 16),
          std::stoi(hex.substr(5, 2), nullptr, 16)};
}

std::string fmt(double v) {
  std::ostringstream s;
  s.imbue(std::locale::classic());
  s.setf(std::ios::fixed);
  s.precision(2);
  s << v;
  return s.str();
}

std::string escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string encode_png_rgb(int width, int height, const std::vector<unsigned char>& rgb) {
  if (width < 1 || height < 1) throw InputError("png: empty image");
  if (rgb.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3) {
    throw InputError("png: pixel buffer does not match the image size");
  }
  std::string raw;
  raw.reserve(static_cast<std::size_t>(height) * (static_cast<std::size_t>(width) * 3 + 1));
  for (int r = 0; r < height; ++r) {
    raw += '\0';  // filter: none
    raw.append(reinterpret_cast<const char*>(rgb.data()) + static_cast<std::size_t>(r) * width * 3,
               static_cast<std::size_t>(width) * 3);
  }
  uLongf packed_size = compressBound(static_cast<uLong>(raw.size()));
  std::string packed(packed_size, '\0');
  if (compress2(reinterpret_cast<Bytef*>(packed.data()), &packed_size,
                reinterpret_cast<const Bytef*>(raw.data()), static_cast<uLong>(raw.size()),
                Z_BEST_COMPRESSION) != Z_OK) {
    throw Error("png: zlib compression failed");
  }
  packed.resize(packed_size);

  std::string png("\x89PNG\r\n\x1a\n", 8);
  std::string ihdr;
  put_u32(ihdr, static_cast<std::uint32_t>(width));
  put_u32(ihdr, static_cast<std::uint32_t>(height));
  ihdr += std::string("\x08\x02\x00\x00\x00", 5);  // 8-bit RGB, no interlace
  put_chunk(png, "IHDR", ihdr);
  put_chunk(png, "IDAT", packed);
  put_chunk(png, "IEND", "");
  return png;
}

std::string class_color(int label) {
  static const std::array<const char*, 10> palette = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                                      "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
                                                      "#bcbd22", "#17becf"};
  const auto n = static_cast<int>(palette.size());
  return palette[static_cast<std::size_t>(((label % n) + n) % n)];
}

std::string render_scatter_svg(const Matrix& t, const IndexVector& labels,
                               const std::vector<bool>& is_test, const PlotOptions& opt) {
  if (t.cols() < 2) throw InputError("plot: need at least two latent columns");
  if (labels.size() != t.rows() || static_cast<Eigen::Index>(is_test.size()) != t.rows()) {
    throw InputError("plot: labels, split flags and points differ in length");
  }
  if (opt.width < 100 || opt.height < 100) throw InputError("plot: canvas too small");
  require_finite(t, "embedding");

  const GridBounds b = opt.background ? opt.background->bounds
                       : t.rows() > 0 ? embedding_bounds(t, 0.05)
                                      : GridBounds{};
  const double left = 60.0;
  const double top = opt.title.empty() ? 20.0 : 40.0;
  const double right = 130.0;
  const double bottom = 50.0;
  const double pw = opt.width - left - right;
  const double ph = opt.height - top - bottom;
  const auto sx = [&](double x) { return left + (x - b.x_min) / (b.x_max - b.x_min) * pw; };
  const auto sy = [&](double y) { return top + (b.y_max - y) / (b.y_max - b.y_min) * ph; };

  std::set<int> classes(labels.data(), labels.data() + labels.size());
  std::string class_list;
  for (int c : classes) class_list += (class_list.empty() ? "" : " ") + std::to_string(c);

  std::ostringstream s;
  s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << opt.width << "\" height=\""
    << opt.height << "\" viewBox=\"0 0 " << opt.width << ' ' << opt.height
    << "\" data-classes=\"" << class_list << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<rect x=\"0\" y=\"0\" width=\"" << opt.width << "\" height=\"" << opt.height
    << "\" style=\"fill:#ffffff\"/>\n";
  if (!opt.title.empty()) {
    s << "<text x=\"" << fmt(left + pw / 2) << "\" y=\"24\" text-anchor=\"middle\" "
      << "style=\"font-size:15px\">" << escape(opt.title) << "</text>\n";
  }

  if (opt.background) {
    const LabelRaster& r = *opt.background;
    std::vector<unsigned char> rgb(static_cast<std::size_t>(r.nx) * r.ny * 3);
    std::size_t k = 0;
    for (int row = r.ny - 1; row >= 0; --row) {
      for (int col = 0; col < r.nx; ++col) {
        const auto c = parse_hex(class_color(r.at(row, col)));
        for (int ch = 0; ch < 3; ++ch) rgb[k++] = static_cast<unsigned char>(c[static_cast<std::size_t>(ch)]);
      }
    }
    const std::string png = encode_png_rgb(r.nx, r.ny, rgb);
    s << "<image class=\"decision-regions\" data-regions=\"" << r.n_distinct() << "\" x=\""
      << fmt(left) << "\" y=\"" << fmt(top) << "\" width=\"" << fmt(pw) << "\" height=\""
      << fmt(ph) << "\" preserveAspectRatio=\"none\" style=\"opacity:0.3\" href=\"data:image/png;base64,"
      << base64_encode(reinterpret_cast<const unsigned char*>(png.data()), png.size())
      << "\"/>\n";
  }

  s << "<rect x=\"" << fmt(left) << "\" y=\"" << fmt(top) << "\" width=\"" << fmt(pw)
    << "\" height=\"" << fmt(ph) << "\" style=\"fill:none;stroke:#333333\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = b.x_min + (b.x_max - b.x_min) * i / 4.0;
    const double yv = b.y_min + (b.y_max - b.y_min) * i / 4.0;
    s << "<text x=\"" << fmt(sx(xv)) << "\" y=\"" << fmt(top + ph + 16)
      << "\" text-anchor=\"middle\">" << fmt(xv) << "</text>\n";
    s << "<text x=\"" << fmt(left - 6) << "\" y=\"" << fmt(sy(yv) + 4)
      << "\" text-anchor=\"end\">" << fmt(yv) << "</text>\n";
  }
  s << "<text x=\"" << fmt(left + pw / 2) << "\" y=\"" << fmt(top + ph + 38)
    << "\" text-anchor=\"middle\">" << escape(opt.x_label) << "</text>\n";
  s << "<text x=\"16\" y=\"" << fmt(top + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
    << fmt(top + ph / 2) << ")\">" << escape(opt.y_label) << "</text>\n";

  s << "<g class=\"markers\">\n";
  for (Eigen::Index i = 0; i < t.rows(); ++i) {
    const bool test = is_test[static_cast<std::size_t>(i)];
    s << "<circle cx=\"" << fmt(sx(t(i, 0))) << "\" cy=\"" << fmt(sy(t(i, 1))) << "\" r=\""
      << fmt(opt.marker_radius) << "\" data-class=\"" << labels(i) << "\" data-split=\""
      << (test ? "test" : "train") << "\" style=\"fill:" << class_color(labels(i))
      << ";fill-opacity:" << (test ? "0.45" : "0.9") << ";stroke:#222222;stroke-width:0.4\"/>\n";
  }
  s << "</g>\n";

  s << "<g class=\"legend\">\n";
  double ly = top + 10;
  for (int c : classes) {
    const std::string name = c < static_cast<int>(opt.class_names.size())
                                 ? opt.class_names[static_cast<std::size_t>(c)]
                                 : "class " + std::to_string(c);
    s << "<rect x=\"" << fmt(left + pw + 14) << "\" y=\"" << fmt(ly - 9) << "\" width=\"10\" height=\"10\" style=\"fill:"
      << class_color(c) << "\"/>\n";
    s << "<text x=\"" << fmt(left + pw + 30) << "\" y=\"" << fmt(ly) << "\">" << escape(name)
      << "</text>\n";
    ly += 18;
  }
  s << "</g>\n</svg>\n";
  return s.str();
}

}  // namespace pcov
