//! Report model and its JSON and CSV renderings.
//!
//! The CSV is long format: one row per (table, node, field). Row 1 carries
//! the schema string, row 2 the column names.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

pub const SCHEMA: &str = "marginlab-report/1";
pub const CSV_COLUMNS: &str = "layer,table,index,coords,field,value";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerdictLine {
    pub layer: String,
    pub check: String,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Section {
    pub layer: String,
    pub name: String,
    pub data: Value,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CsvRow {
    pub layer: String,
    pub table: String,
    pub index: usize,
    pub coords: Vec<f64>,
    pub field: String,
    pub value: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub name: String,
    pub command: String,
    pub pass: bool,
    pub verdicts: Vec<VerdictLine>,
    pub sections: Vec<Section>,
    #[serde(skip)]
    pub rows: Vec<CsvRow>,
}

impl Report {
    pub fn new(name: &str, command: &str) -> Self {
        Report {
            schema: SCHEMA,
            name: name.to_string(),
            command: command.to_string(),
            pass: true,
            verdicts: Vec::new(),
            sections: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn verdict(&mut self, layer: &str, check: &str, pass: bool, note: Option<String>) {
        self.pass &= pass;
        self.verdicts.push(VerdictLine { layer: layer.into(), check: check.into(), pass, note });
    }

    pub fn section(&mut self, layer: &str, name: &str, data: &impl Serialize) {
        let data = serde_json::to_value(data).expect("report data serializes");
        self.sections.push(Section { layer: layer.into(), name: name.into(), data });
    }

    /// Appends one CSV row per `(field, value)` pair.
    pub fn row(&mut self, layer: &str, table: &str, index: usize, coords: &[f64], fields: &[(&str, String)]) {
        for (field, value) in fields {
            self.rows.push(CsvRow {
                layer: layer.into(),
                table: table.into(),
                index,
                coords: coords.to_vec(),
                field: (*field).into(),
                value: value.clone(),
            });
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("# schema={SCHEMA}\n{CSV_COLUMNS}\n");
        for r in &self.rows {
            let coords = r.coords.iter().map(f64::to_string).collect::<Vec<_>>().join(";");
            writeln!(s, "{},{},{},{},{},{}", r.layer, r.table, r.index, coords, r.field, escape(&r.value)).unwrap();
        }
        for (i, v) in self.verdicts.iter().enumerate() {
            writeln!(s, "{},verdicts,{i},,{},{}", v.layer, v.check, v.pass).unwrap();
        }
        s
    }

    /// Fixed-width summary for stdout.
    pub fn summary(&self) -> String {
        let mut s = format!("marginlab {} {}\n", self.command, self.name);
        for v in &self.verdicts {
            let mark = if v.pass { "pass" } else { "FAIL" };
            write!(s, "  {:<12} {:<36} {mark}", v.layer, v.check).unwrap();
            if let Some(n) = &v.note {
                write!(s, "  ({n})").unwrap();
            }
            s.push('\n');
        }
        let passed = self.verdicts.iter().filter(|v| v.pass).count();
        writeln!(s, "result: {} ({passed}/{})", if self.pass { "pass" } else { "FAIL" }, self.verdicts.len()).unwrap();
        s
    }

    /// Writes `report.json` and `report.csv` into `dir`, each through a
    /// temporary file and a rename.
    pub fn write(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        write_atomic(&dir.join("report.json"), &self.to_json())?;
        write_atomic(&dir.join("report.csv"), &self.to_csv())
    }
}

fn escape(v: &str) -> String {
    if v.contains([',', '"', '\n']) {
        format!("\"{}\"", v.replace('"', "\"\""))
    } else {
        v.to_string()
    }
}

fn write_atomic(path: &Path, contents: &str) -> io::Result<()> {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("report");
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renderings() {
        let mut r = Report::new("demo", "marginal");
        r.row("core", "mu", 0, &[-1.0, 0.5], &[("mu", "+inf".into()), ("argmin", "a,b".into())]);
        r.verdict("core", "domain_identity", true, None);
        r.verdict("core", "epigraph", false, Some("row 3".into()));
        assert!(!r.pass);
        let csv = r.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "# schema=marginlab-report/1");
        assert_eq!(lines[1], CSV_COLUMNS);
        assert_eq!(lines[2], "core,mu,0,-1;0.5,mu,+inf");
        assert_eq!(lines[3], "core,mu,0,-1;0.5,argmin,\"a,b\"");
        assert_eq!(lines[5], "core,verdicts,1,,epigraph,false");
        let json: Value = serde_json::from_str(&r.to_json()).unwrap();
        let keys: Vec<&str> = json.as_object().unwrap().keys().map(|k| k.as_str()).collect();
        assert_eq!(keys, ["schema", "name", "command", "pass", "verdicts", "sections"]);
        assert!(r.summary().ends_with("result: FAIL (1/2)\n"));
    }

    #[test]
    fn atomic_write() {
        let dir = std::env::temp_dir().join(format!("marginlab-report-{}", std::process::id()));
        let r = Report::new("demo", "marginal");
        r.write(&dir).unwrap();
        assert_eq!(fs::read_to_string(dir.join("report.json")).unwrap(), r.to_json());
        assert!(!dir.join(".report.json.tmp").exists());
        fs::remove_dir_all(dir).unwrap();
    }
}
