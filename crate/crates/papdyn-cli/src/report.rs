//! Side-by-side report emission: a human-readable text rendering and a
//! machine-readable JSON document with the same content.

use serde_json::{json, Value};
use std::fs;
use std::path::Path;

#[derive(Debug)]
pub struct Report {
    pub command: String,
    pub passed: bool,
    sections: Vec<(String, Vec<(String, String)>)>,
    json: Value,
}

impl Report {
    pub fn new(command: &str) -> Self {
        Report {
            command: command.to_string(),
            passed: true,
            sections: Vec::new(),
            json: json!({ "command": command }),
        }
    }

    pub fn section(&mut self, title: &str) -> &mut Self {
        self.sections.push((title.to_string(), Vec::new()));
        self
    }

    pub fn line(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        if self.sections.is_empty() {
            self.section("summary");
        }
        self.sections.last_mut().unwrap().1.push((key.to_string(), value.to_string()));
        self
    }

    pub fn verdict(&mut self, key: &str, passed: bool, detail: impl std::fmt::Display) -> &mut Self {
        if !passed {
            self.passed = false;
        }
        let tag = if passed { "pass" } else { "FAIL" };
        self.line(key, format!("[{tag}] {detail}"))
    }

    pub fn attach_json(&mut self, key: &str, value: Value) -> &mut Self {
        self.json[key] = value;
        self
    }

    pub fn render_text(&self) -> String {
        let mut out = format!("papdyn {}\n", self.command);
        for (title, lines) in &self.sections {
            out.push_str(&format!("\n[{title}]\n"));
            for (k, v) in lines {
                out.push_str(&format!("  {k} = {v}\n"));
            }
        }
        out.push_str(&format!(
            "\nresult: {}\n",
            if self.passed { "pass" } else { "FAIL" }
        ));
        out
    }

    pub fn to_json(&self) -> Value {
        let mut v = self.json.clone();
        v["passed"] = json!(self.passed);
        v["sections"] = json!(self
            .sections
            .iter()
            .map(|(title, lines)| {
                json!({
                    "title": title,
                    "lines": lines.iter().map(|(k, val)| json!({k: val})).collect::<Vec<_>>()
                })
            })
            .collect::<Vec<_>>());
        v
    }

    /// Writes `report.txt` and `report.json` into `dir`.
    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("report.txt"), self.render_text())?;
        fs::write(
            dir.join("report.json"),
            serde_json::to_string_pretty(&self.to_json()).expect("report serializes") + "\n",
        )?;
        Ok(())
    }
}
