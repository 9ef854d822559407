// Every ladder study with its default configuration, summarized as a Markdown table.

use multispike::lab::{run_study, summary_markdown, LadderStudy, StudyConfig, StudyId};

pub fn run_example() -> Vec<LadderStudy> {
    StudyId::ALL
        .iter()
        .map(|id| run_study(&StudyConfig::new(*id)).expect("study runs"))
        .collect()
}

#[allow(dead_code)]
fn main() {
    let studies = run_example();
    print!("{}", summary_markdown(&studies));
    for s in &studies {
        for note in &s.notes {
            println!("{}: {note}", s.study_id);
        }
    }
}
