#include "bvh/bvh.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace hhi::bvh {

const char* channel_name(Channel c) {
  switch (c) {
    case Channel::Xpos: return "Xposition";
    case Channel::Ypos: return "Yposition";
    case Channel::Zpos: return "Zposition";
    case Channel::Xrot: return "Xrotation";
    case Channel::Yrot: return "Yrotation";
    case Channel::Zrot: return "Zrotation";
  }
  return "?";
}

int SkeletonHierarchy::index_of(const std::string& name) const {
  for (size_t i = 0; i < joints.size(); ++i) {
    if (joints[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

namespace {

struct Token {
  std::string text;
  int line;
};

struct Cursor {
  std::vector<Token> tokens;
  size_t pos = 0;
  std::string origin;

  bool done() const { return pos >= tokens.size(); }

  [[noreturn]] void fail(const std::string& msg, int line) const {
    throw ParseError(origin + ":" + std::to_string(line) + ": " + msg);
  }

  const Token& peek() const {
    if (done()) {
      int line = tokens.empty() ? 1 : tokens.back().line;
      fail("unexpected end of file", line);
    }
    return tokens[pos];
  }

  Token next() {
    Token t = peek();
    ++pos;
    return t;
  }

  Token expect(const std::string& word) {
    Token t = next();
    if (t.text != word) fail("expected '" + word + "', got '" + t.text + "'", t.line);
    return t;
  }

  double number() {
    Token t = next();
    const char* s = t.text.c_str();
    char* end = nullptr;
    double v = std::strtod(s, &end);
    if (end == s || *end != '\0') fail("expected a number, got '" + t.text + "'", t.line);
    return v;
  }

  std::int64_t integer() {
    Token t = next();
    const char* s = t.text.c_str();
    char* end = nullptr;
    long long v = std::strtoll(s, &end, 10);
    if (end == s || *end != '\0') fail("expected an integer, got '" + t.text + "'", t.line);
    return static_cast<std::int64_t>(v);
  }
};

std::vector<Token> tokenize(const std::string& text) {
  std::vector<Token> out;
  int line = 1;
  size_t i = 0;
  while (i < text.size()) {
    char c = text[i];
    if (c == '\n') {
      ++line;
      ++i;
    } else if (c == ' ' || c == '\t' || c == '\r') {
      ++i;
    } else if (c == '{' || c == '}') {
      out.push_back({std::string(1, c), line});
      ++i;
    } else {
      size_t start = i;
      while (i < text.size() && text[i] != ' ' && text[i] != '\t' && text[i] != '\r' &&
             text[i] != '\n' && text[i] != '{' && text[i] != '}') {
        ++i;
      }
      out.push_back({text.substr(start, i - start), line});
    }
  }
  return out;
}

Channel parse_channel(Cursor& cur) {
  Token t = cur.next();
  if (t.text == "Xposition") return Channel::Xpos;
  if (t.text == "Yposition") return Channel::Ypos;
  if (t.text == "Zposition") return Channel::Zpos;
  if (t.text == "Xrotation") return Channel::Xrot;
  if (t.text == "Yrotation") return Channel::Yrot;
  if (t.text == "Zrotation") return Channel::Zrot;
  cur.fail("unknown channel '" + t.text + "'", t.line);
}

// Parses the body after "ROOT name" / "JOINT name": offset, channels,
// children or end site.
void parse_joint_body(Cursor& cur, SkeletonHierarchy& sk, int self) {
  cur.expect("{");
  Token off = cur.expect("OFFSET");
  (void)off;
  for (int i = 0; i < 3; ++i) sk.joints[self].offset[static_cast<size_t>(i)] = cur.number();

  if (cur.peek().text == "CHANNELS") {
    cur.next();
    Token count_tok = cur.peek();
    std::int64_t n = cur.integer();
    if (n < 0 || n > 6) cur.fail("channel count must be 0..6", count_tok.line);
    sk.joints[self].channel_offset = sk.total_channels;
    for (std::int64_t i = 0; i < n; ++i) sk.joints[self].channels.push_back(parse_channel(cur));
    sk.total_channels += static_cast<int>(n);
  }

  for (;;) {
    Token t = cur.peek();
    if (t.text == "JOINT") {
      cur.next();
      Token name = cur.next();
      int child = sk.joint_count();
      Joint j;
      j.name = name.text;
      j.parent = self;
      sk.joints.push_back(j);
      parse_joint_body(cur, sk, child);
    } else if (t.text == "End") {
      cur.next();
      Token site = cur.next();
      if (site.text != "Site") cur.fail("expected 'Site' after 'End'", site.line);
      cur.expect("{");
      cur.expect("OFFSET");
      for (int i = 0; i < 3; ++i) sk.joints[self].end_site[static_cast<size_t>(i)] = cur.number();
      sk.joints[self].has_end_site = true;
      cur.expect("}");
    } else if (t.text == "}") {
      cur.next();
      return;
    } else {
      cur.fail("expected JOINT, End Site, or '}', got '" + t.text + "'", t.line);
    }
  }
}

}  // namespace

BvhFile parse_bvh_text(const std::string& text, const std::string& origin) {
  Cursor cur;
  cur.tokens = tokenize(text);
  cur.origin = origin;

  BvhFile out;
  cur.expect("HIERARCHY");
  Token root_kw = cur.expect("ROOT");
  (void)root_kw;
  Token root_name = cur.next();
  Joint root;
  root.name = root_name.text;
  root.parent = -1;
  out.skeleton.joints.push_back(root);
  parse_joint_body(cur, out.skeleton, 0);

  Token motion_kw = cur.expect("MOTION");
  Token frames_kw = cur.next();
  if (frames_kw.text != "Frames:") cur.fail("expected 'Frames:', got '" + frames_kw.text + "'", frames_kw.line);
  Token frames_tok = cur.peek();
  std::int64_t frames = cur.integer();
  if (frames < 0) cur.fail("frame count cannot be negative", frames_tok.line);
  cur.expect("Frame");
  Token time_kw = cur.next();
  if (time_kw.text != "Time:") cur.fail("expected 'Time:', got '" + time_kw.text + "'", time_kw.line);
  Token ft_tok = cur.peek();
  double frame_time = cur.number();
  if (frame_time <= 0.0) cur.fail("frame time must be positive", ft_tok.line);

  MotionClip& clip = out.motion;
  clip.frame_time = frame_time;
  clip.frames = frames;
  clip.channels = out.skeleton.total_channels;
  clip.data.reserve(static_cast<size_t>(frames) * static_cast<size_t>(clip.channels));
  for (std::int64_t f = 0; f < frames; ++f) {
    for (int c = 0; c < clip.channels; ++c) {
      if (cur.done()) {
        int line = cur.tokens.empty() ? 1 : cur.tokens.back().line;
        cur.fail("motion data ends early: declared " + std::to_string(frames) +
                     " frames (line " + std::to_string(motion_kw.line) + "), found " +
                     std::to_string(f) + " complete",
                 line);
      }
      clip.data.push_back(cur.number());
    }
  }
  if (!cur.done()) {
    Token extra = cur.peek();
    cur.fail("trailing data after declared " + std::to_string(frames) + " frames", extra.line);
  }
  return out;
}

BvhFile parse_bvh(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open BVH file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_bvh_text(ss.str(), path);
}

namespace {

void append_num(std::string& out, double v, const char* fmt) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  out += buf;
}

void write_joint(std::string& out, const SkeletonHierarchy& sk, int j, int depth) {
  std::string ind(static_cast<size_t>(depth) * 2, ' ');
  const Joint& joint = sk.joints[static_cast<size_t>(j)];
  out += ind + (joint.parent < 0 ? "ROOT " : "JOINT ") + joint.name + "\n" + ind + "{\n";
  std::string ind2 = ind + "  ";
  out += ind2 + "OFFSET";
  for (double v : joint.offset) {
    out += " ";
    append_num(out, v, "%.6f");
  }
  out += "\n" + ind2 + "CHANNELS " + std::to_string(joint.channels.size());
  for (Channel c : joint.channels) out += std::string(" ") + channel_name(c);
  out += "\n";
  for (int c = 0; c < sk.joint_count(); ++c) {
    if (sk.joints[static_cast<size_t>(c)].parent == j) write_joint(out, sk, c, depth + 1);
  }
  if (joint.has_end_site) {
    out += ind2 + "End Site\n" + ind2 + "{\n" + ind2 + "  OFFSET";
    for (double v : joint.end_site) {
      out += " ";
      append_num(out, v, "%.6f");
    }
    out += "\n" + ind2 + "}\n";
  }
  out += ind + "}\n";
}

}  // namespace

std::string write_bvh_text(const SkeletonHierarchy& skeleton, const MotionClip& motion) {
  if (motion.channels != skeleton.total_channels) {
    throw ConfigError("motion channel count does not match hierarchy");
  }
  std::string out = "HIERARCHY\n";
  write_joint(out, skeleton, 0, 0);
  out += "MOTION\nFrames: " + std::to_string(motion.frames) + "\nFrame Time: ";
  append_num(out, motion.frame_time, "%.8f");
  out += "\n";
  for (std::int64_t f = 0; f < motion.frames; ++f) {
    const double* row = motion.row(f);
    for (int c = 0; c < motion.channels; ++c) {
      if (c) out += " ";
      append_num(out, row[c], "%.6f");
    }
    out += "\n";
  }
  return out;
}

void write_bvh(const std::string& path, const SkeletonHierarchy& skeleton,
               const MotionClip& motion) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write BVH file: " + path);
  out << write_bvh_text(skeleton, motion);
  if (!out) throw IoError("short write: " + path);
}

MotionClip resample(const MotionClip& clip, double target_fps) {
  if (target_fps <= 0.0) throw ConfigError("target fps must be positive");
  double ratio = clip.fps() / target_fps;
  double k = std::round(ratio);
  if (k < 1.0 || std::fabs(ratio - k) > 1e-3) {
    char buf[128];
    std::snprintf(buf, sizeof(buf),
                  "cannot resample %.3f fps to %.3f fps: stride %.4f is not an integer",
                  clip.fps(), target_fps, ratio);
    throw ConfigError(buf);
  }
  std::int64_t stride = static_cast<std::int64_t>(k);
  MotionClip out;
  out.frame_time = clip.frame_time * static_cast<double>(stride);
  out.channels = clip.channels;
  out.frames = (clip.frames + stride - 1) / stride;
  out.data.reserve(static_cast<size_t>(out.frames) * static_cast<size_t>(out.channels));
  for (std::int64_t f = 0; f < clip.frames; f += stride) {
    const double* row = clip.row(f);
    out.data.insert(out.data.end(), row, row + clip.channels);
  }
  return out;
}

}  // namespace hhi::bvh
