use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use crate::catalog::City;

const CHICAGO: &str = include_str!("../../data/roster_chicago.csv");
const HOUSTON: &str = include_str!("../../data/roster_houston.csv");

/// Community names by id: Chicago's 77 community areas in official index
/// order, Houston's 88 super neighborhoods by number.
pub fn roster(city: City) -> Vec<(u32, String)> {
    let text = match city {
        City::Chicago => CHICAGO,
        City::Houston => HOUSTON,
    };
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    rdr.records()
        .map(|r| {
            let r = r.expect("bundled roster is valid");
            (r[0].parse().expect("bundled roster id"), r[1].to_string())
        })
        .collect()
}

pub fn community_count(city: City) -> usize {
    match city {
        City::Chicago => 77,
        City::Houston => 88,
    }
}

/// Wide fact table: `community_id,<label>,<label>,...`, one row per community.
pub fn load_facts(path: impl AsRef<Path>) -> Result<BTreeMap<u32, Vec<(String, String)>>, String> {
    let file = std::fs::File::open(path.as_ref()).map_err(|e| format!("{}: {e}", path.as_ref().display()))?;
    facts_from_reader(file)
}

pub fn facts_from_reader<R: Read>(reader: R) -> Result<BTreeMap<u32, Vec<(String, String)>>, String> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr.headers().map_err(|e| e.to_string())?.iter().map(str::to_string).collect();
    if header.first().map(String::as_str) != Some("community_id") {
        return Err("fact table must start with a `community_id` column".into());
    }
    let mut out = BTreeMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| e.to_string())?;
        let id: u32 = rec[0].parse().map_err(|e| format!("fact table row {}: community_id: {e}", i + 1))?;
        let facts: Vec<(String, String)> = header[1..]
            .iter()
            .zip(rec.iter().skip(1))
            .filter(|(_, v)| !v.is_empty())
            .map(|(k, v)| (k.clone(), v.to_string()))
            .collect();
        if out.insert(id, facts).is_some() {
            return Err(format!("fact table row {}: duplicate community_id {id}", i + 1));
        }
    }
    Ok(out)
}
