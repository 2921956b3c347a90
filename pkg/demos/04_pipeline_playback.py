"""A full compositional pipeline run from a scripted transcript.

No network, no live model: a playback backend supplies every completion,
including a constants section carrying the classic unquoted-asset error
and the repair that fixes it. The run report shows each stage, the
single repair, and the final validity verdict.

    python demos/04_pipeline_playback.py
"""

from scenforge.gateway import Gateway, MemoryCache, PlaybackBackend
from scenforge.pipeline import PipelineConfig, run_pipeline
from scenforge.reports import ReportRecord, AgentMention, classify_report

report = ReportRecord(
    id="demo",
    narrative=(
        "A bicyclist struck the right side of the autonomous vehicle while "
        "the vehicle was paused at a four-way intersection."
    ),
    weather="clear",
    road_context="intersection",
    dynamic_agents=(AgentMention("av"), AgentMention("cyclist")),
)
print("difficulty:", classify_report(report))

TRANSCRIPT = {
    "demo/objects": ["""\
EXPERT 1:
1. Cruise AV
2. Bicyclist
EXPERT 2:
1. Cruise AV
2. Bicyclist
EXPERT 3:
1. Cruise AV
2. Bicyclist
Panel Discussion: agreement on both objects.
FINAL ANSWER:
1. Cruise AV
2. Bicyclist
"""],
    "demo/questions": ["""\
1. What speed was the Bicyclist moving at?
2. Where was the Bicyclist positioned?
3. What type or model is the Cruise AV?
4. What was the weather at the time of the events?
5. What kind of road setting does the scenario take place in?
"""],
    "demo/answers": ["""\
BIKE_SPEED = Normal(10, 1)
BRAKE_ACTION = TruncatedNormal(0.95, 0.05, 0.9, 1.0)
weather: clear
road: 4-way intersection
"""],
    # the constants section arrives with the unquoted asset id
    "demo/section:constants": ["""\
BIKE_SPEED = Normal(10, 1)
BRAKE_ACTION = TruncatedNormal(0.95, 0.05, 0.9, 1.0)
EGO_MODEL = vehicle.lincoln.mkz_2017
"""],
    # the scripted repair adds the quotes
    "demo/repair:constants": ["""\
BIKE_SPEED = Normal(10, 1)
BRAKE_ACTION = TruncatedNormal(0.95, 0.05, 0.9, 1.0)
EGO_MODEL = 'vehicle.lincoln.mkz_2017'
"""],
    "demo/section:behaviors": ["""\
behavior BikeBehavior(speed):
    do FollowLaneBehavior(speed)
    interrupt when simulation_time > 5:
        take SetBrakeAction(BRAKE_ACTION)
"""],
    "demo/section:spatial": ["""\
intersec = Uniform(*filter(lambda i: i.is4Way, network.intersections))
startLane = Uniform(*intersec.incomingLanes)
ego_spwPt = startLane.centerline[-1]
ego = new Car at ego_spwPt, with model EGO_MODEL
bike = new Bicycle following roadDirection from ego_spwPt for -8, with behavior BikeBehavior(BIKE_SPEED)
require BIKE_SPEED > 5
"""],
}

gateway = Gateway(PlaybackBackend(by_stage=TRANSCRIPT), cache=MemoryCache())
result = run_pipeline(report, PipelineConfig(seed=11), gateway)

print("\nstage log:")
for trace in result.traces:
    print(f"  {trace.stage:20s} outcome={trace.outcome:9s} "
          f"calls={len(trace.interactions)}")
print("repairs:", result.repairs)
print("success:", result.success, "| validity:",
      result.validity.syntactic, result.validity.semantic, result.validity.executable)
print("\nfinal program:\n")
print(result.final_program)
