#include "lseq/service.hpp"

#include <algorithm>
#include <thread>

#include "httplib.h"
#include "json.hpp"

namespace lseq {

using nlohmann::json;

namespace {

std::string html_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
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

json span_json(const SourceSpan& s) { return {{"module", s.module}, {"start", s.start}, {"end", s.end}}; }

json diagnostics_json(const std::vector<Diagnostic>& errors) {
  json out = json::array();
  for (const auto& d : errors) {
    json e = span_json(d.span);
    e["message"] = d.message;
    out.push_back(e);
  }
  return out;
}

json mode_json(const Mode& m) {
  return {{"kind", to_string(m.kind)}, {"step_pause_ms", m.step_pause_ms}};
}

json snapshot_json(const StateSnapshot& s) {
  json highlights = json::array();
  for (const auto& h : s.highlights) highlights.push_back(span_json(h));
  return {{"seq", s.seq},
          {"generation", s.generation},
          {"transport", {{"phase", to_string(s.phase)}, {"mode", mode_json(s.mode)}}},
          {"current_term", s.current_term},
          {"highlights", highlights},
          {"stream_time", s.stream_time},
          {"items", s.items},
          {"last_item", s.last_item ? json(*s.last_item) : json(nullptr)},
          {"error", s.error ? json(*s.error) : json(nullptr)}};
}

bool wants_json(const httplib::Request& req) {
  if (req.get_param_value("format") == "json") return true;
  return req.get_header_value("Accept").find("application/json") != std::string::npos;
}

bool sent_json(const httplib::Request& req) {
  return req.get_header_value("Content-Type").find("application/json") != std::string::npos;
}

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

std::string module_page(const std::string& name, const ModuleView& view, const std::string& editable,
                        const std::vector<Diagnostic>& errors, const std::string& notice) {
  std::string html = "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>" + html_escape(name) +
                     "</title></head><body>\n<h1>" + html_escape(name) + "</h1>\n";
  if (!notice.empty()) html += "<p>" + html_escape(notice) + "</p>\n";
  if (!errors.empty()) {
    html += "<ul class=\"errors\">\n";
    for (const auto& d : errors) html += "<li>" + html_escape(to_string(d)) + "</li>\n";
    html += "</ul>\n";
  }
  html += "<pre>" + html_escape(view.header) + "</pre>\n";
  if (view.has_marker) {
    html += "<form method=\"post\" action=\"/module/" + html_escape(name) + "\">\n";
    html += "<input type=\"hidden\" name=\"expected_generation\" value=\"" + std::to_string(view.generation) +
            "\">\n";
    html += "<textarea name=\"editable_text\" rows=\"30\" cols=\"100\">" + html_escape(editable) +
            "</textarea><br>\n<button type=\"submit\">Submit</button>\n</form>\n";
  }
  html += "</body></html>\n";
  return html;
}

const char* kUiPlaceholder =
    "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>lseq</title></head><body>\n"
    "<p>The browser interface is not installed. Modules: <a href=\"/modules\">/modules</a>, "
    "state: <a href=\"/state\">/state</a>.</p>\n</body></html>\n";

}  // namespace

std::optional<std::pair<std::string, int>> parse_address(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos || colon == 0) return std::nullopt;
  const std::string port_text = text.substr(colon + 1);
  if (port_text.empty() || port_text.size() > 5 ||
      port_text.find_first_not_of("0123456789") != std::string::npos) {
    return std::nullopt;
  }
  const int port = std::stoi(port_text);
  if (port > 65535) return std::nullopt;
  return std::make_pair(text.substr(0, colon), port);
}

struct HttpService::Impl {
  Impl(ProgramStore& s, Runner& r, ServiceConfig c) : store(s), runner(r), config(std::move(c)) {}

  void routes();
  void post_module(const httplib::Request& req, httplib::Response& res);

  ProgramStore& store;
  Runner& runner;
  ServiceConfig config;
  httplib::Server server;
  std::thread thread;
};

void HttpService::Impl::routes() {
  server.Get("/modules", [this](const httplib::Request&, httplib::Response& res) {
    json out = json::array();
    for (const auto& m : store.modules()) out.push_back({{"name", m.name}, {"has_marker", m.has_marker}});
    send_json(res, 200, out);
  });

  server.Get(R"(/module/([A-Za-z][A-Za-z0-9_.]*))", [this](const httplib::Request& req, httplib::Response& res) {
    const std::string name = req.matches[1];
    try {
      const ModuleView view = store.view(name);
      if (wants_json(req)) {
        send_json(res, 200,
                  {{"header", view.header},
                   {"editable", view.editable},
                   {"has_marker", view.has_marker},
                   {"generation", view.generation}});
      } else {
        res.set_content(module_page(name, view, view.editable, {}, ""), "text/html; charset=utf-8");
      }
    } catch (const NoSuchModule& e) {
      send_json(res, 404, {{"error", e.what()}});
    }
  });

  server.Post(R"(/module/([A-Za-z][A-Za-z0-9_.]*))",
              [this](const httplib::Request& req, httplib::Response& res) { post_module(req, res); });

  server.Get("/state", [this](const httplib::Request& req, httplib::Response& res) {
    std::uint64_t since = 0;
    auto timeout = config.default_poll_timeout;
    try {
      if (req.has_param("since")) since = std::stoull(req.get_param_value("since"));
      if (req.has_param("timeout")) timeout = std::chrono::milliseconds(std::stoll(req.get_param_value("timeout")));
    } catch (const std::exception&) {
      send_json(res, 400, {{"error", "since and timeout must be integers"}});
      return;
    }
    timeout = std::clamp(timeout, std::chrono::milliseconds(0), config.max_poll_timeout);
    send_json(res, 200, snapshot_json(runner.board().wait_newer(since, timeout)));
  });

  server.Post("/transport", [this](const httplib::Request& req, httplib::Response& res) {
    std::optional<TransportAction> action;
    std::optional<Mode> mode;
    try {
      const json body = json::parse(req.body);
      if (body.contains("action") && !body["action"].is_null()) {
        action = parse_transport_action(body["action"].get<std::string>());
        if (!action) {
          send_json(res, 400, {{"error", "unknown action"}});
          return;
        }
      }
      if (body.contains("mode") && !body["mode"].is_null()) {
        auto kind = parse_mode_kind(body["mode"].get<std::string>());
        if (!kind) {
          send_json(res, 400, {{"error", "unknown mode"}});
          return;
        }
        Mode m{*kind, runner.board().current().mode.step_pause_ms};
        if (body.contains("step_pause_ms")) m.step_pause_ms = body["step_pause_ms"].get<std::int64_t>();
        if (m.step_pause_ms <= 0) {
          send_json(res, 400, {{"error", "step_pause_ms must be positive"}});
          return;
        }
        mode = m;
      }
    } catch (const json::exception& e) {
      send_json(res, 400, {{"error", std::string("malformed request: ") + e.what()}});
      return;
    }
    if (!action && !mode) {
      send_json(res, 400, {{"error", "expected an action or a mode"}});
      return;
    }
    try {
      const TransportState t = runner.transport(action, mode);
      const StateSnapshot s = runner.board().current();
      send_json(res, 200,
                {{"phase", to_string(t.phase)}, {"mode", mode_json(s.mode)}, {"stream_time", t.stream_time},
                 {"seq", s.seq}});
    } catch (const IllegalTransport& e) {
      send_json(res, 409, {{"error", e.what()}, {"phase", to_string(runner.board().current().phase)}});
    }
  });

  if (config.ui_dir && std::filesystem::is_directory(*config.ui_dir)) {
    server.set_mount_point("/ui", config.ui_dir->string());
  } else {
    server.Get("/ui/?", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(kUiPlaceholder, "text/html; charset=utf-8");
    });
  }
}

void HttpService::Impl::post_module(const httplib::Request& req, httplib::Response& res) {
  const std::string name = req.matches[1];
  const bool as_json = sent_json(req) || wants_json(req);
  std::string text;
  std::optional<std::uint64_t> expected;
  try {
    if (sent_json(req)) {
      const json body = json::parse(req.body);
      text = body.at("editable_text").get<std::string>();
      if (body.contains("expected_generation") && !body["expected_generation"].is_null()) {
        expected = body["expected_generation"].get<std::uint64_t>();
      }
    } else {
      if (!req.has_param("editable_text")) throw std::invalid_argument("missing editable_text");
      text = req.get_param_value("editable_text");
      if (req.has_param("expected_generation") && !req.get_param_value("expected_generation").empty()) {
        expected = std::stoull(req.get_param_value("expected_generation"));
      }
    }
  } catch (const std::exception& e) {
    send_json(res, 400, {{"error", std::string("malformed request: ") + e.what()}});
    return;
  }

  try {
    const CheckResult r = store.submit_edit(name, text, expected);
    const int status = r.accepted ? 200 : 422;
    if (as_json) {
      json body{{"accepted", r.accepted}, {"generation", r.generation}};
      if (!r.accepted) body["errors"] = diagnostics_json(r.errors);
      send_json(res, status, body);
    } else {
      const ModuleView view = store.view(name);
      res.status = status;
      res.set_content(module_page(name, view, r.accepted ? view.editable : text, r.errors,
                                  r.accepted ? "Accepted." : "Rejected, nothing was changed."),
                      "text/html; charset=utf-8");
    }
  } catch (const NoSuchModule& e) {
    send_json(res, 404, {{"error", e.what()}});
  } catch (const NoEditableRegion& e) {
    send_json(res, 404, {{"error", e.what()}});
  } catch (const StaleGeneration& e) {
    send_json(res, 409, {{"error", e.what()}, {"generation", e.actual()}});
  }
}

HttpService::HttpService(ProgramStore& store, Runner& runner, ServiceConfig config)
    : impl_(std::make_unique<Impl>(store, runner, std::move(config))) {
  const int workers = impl_->config.worker_threads;
  impl_->server.new_task_queue = [workers] { return new httplib::ThreadPool(static_cast<size_t>(workers)); };
  store.set_swap_hook([&runner](std::shared_ptr<const Program> p) { runner.swap_program(std::move(p)); });
  impl_->routes();
}

HttpService::~HttpService() {
  stop();
  impl_->store.set_swap_hook({});
}

int HttpService::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

void HttpService::start() {
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

void HttpService::stop() {
  if (!impl_->thread.joinable()) return;
  impl_->runner.release_waiters();
  impl_->server.stop();
  impl_->thread.join();
}

}  // namespace lseq
