#include "crowdtt/frame_file.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include "crowdtt/error.hpp"
#include "crowdtt/text_io.hpp"

namespace crowdtt {

std::size_t FrameFile::population() const {
    std::set<std::string> ids;
    for (const auto& f : frames)
        for (const auto& a : f.agents) ids.insert(a.id);
    return ids.size();
}

Clip FrameFile::clip_header(const ArenaGeometry& arena) const {
    Clip c;
    c.start = start;
    c.duration = duration;
    c.rate = rate;
    c.arena = arena;
    c.source = source;
    return c;
}

FrameFile frames_from_clip(const Clip& clip) {
    FrameFile f;
    f.frames = to_frames(clip);
    f.rate = clip.rate;
    f.start = clip.start;
    f.duration = clip.duration;
    f.source = clip.source;
    return f;
}

void write_frames(std::ostream& out, const FrameFile& file) {
    using text::format_double;
    out << "# rate=" << format_double(file.rate) << '\n';
    out << "# start=" << format_double(file.start) << '\n';
    out << "# duration=" << format_double(file.duration) << '\n';
    out << "# source=" << to_string(file.source) << '\n';
    for (const auto& [k, v] : file.stamps) out << "# " << k << '=' << v << '\n';
    out << "t,agent_id,x,y,heading,speed\n";
    for (const auto& f : file.frames)
        for (const auto& a : f.agents)
            out << format_double(f.t) << ',' << a.id << ',' << format_double(a.position.x) << ','
                << format_double(a.position.y) << ',' << format_double(a.heading) << ',' << format_double(a.speed)
                << '\n';
}

FrameFile read_frames(std::istream& in) {
    FrameFile file;
    std::string line;
    std::size_t lineno = 0;
    bool header = false;
    while (std::getline(in, line)) {
        ++lineno;
        const auto body = text::trim(line);
        if (body.empty()) continue;
        if (body.front() == '#') {
            const auto kv = text::trim(body.substr(1));
            const auto eq = kv.find('=');
            if (eq == std::string_view::npos) continue;
            const std::string key(text::trim(kv.substr(0, eq)));
            const std::string value(text::trim(kv.substr(eq + 1)));
            double v = 0.0;
            const bool numeric = text::parse_double(value, v);
            if (key == "rate" && numeric) {
                file.rate = v;
            } else if (key == "start" && numeric) {
                file.start = v;
            } else if (key == "duration" && numeric) {
                file.duration = v;
            } else if (key == "source") {
                file.source = parse_track_source(value);
            } else {
                file.stamps.emplace_back(key, value);
            }
            continue;
        }
        if (!header) {
            if (body != "t,agent_id,x,y,heading,speed")
                throw ParseError(lineno, "expected header `t,agent_id,x,y,heading,speed`");
            header = true;
            continue;
        }
        const auto cols = text::split(body, ',');
        if (cols.size() != 6) throw ParseError(lineno, "expected 6 fields");
        double t = 0.0;
        AgentState a;
        a.id = std::string(text::trim(cols[1]));
        if (a.id.empty() || !text::parse_double(cols[0], t) || !text::parse_double(cols[2], a.position.x) ||
            !text::parse_double(cols[3], a.position.y) || !text::parse_double(cols[4], a.heading) ||
            !text::parse_double(cols[5], a.speed))
            throw ParseError(lineno, "malformed frame row");
        if (file.frames.empty() || file.frames.back().t != t) {
            if (!file.frames.empty() && t < file.frames.back().t) throw ParseError(lineno, "frame times decrease");
            file.frames.push_back({t, {}});
        }
        file.frames.back().agents.push_back(std::move(a));
    }
    if (!header) throw ParseError(lineno, "frame file has no header");
    return file;
}

void save_frames(const std::string& path, const FrameFile& file) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    write_frames(out, file);
}

FrameFile load_frames(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    return read_frames(in);
}

}  // namespace crowdtt
