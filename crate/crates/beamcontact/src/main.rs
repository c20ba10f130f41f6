use clap::Parser;

fn main() {
    let cli = beamcontact::cli::Cli::parse();
    std::process::exit(beamcontact::cli::execute(cli));
}
