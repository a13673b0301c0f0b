#!/usr/bin/env python3
"""Regenerates japantravel_mini.jsonl, a small synthetic travel-community dump.

50 post records and 200 comment records. Planted defects: 3 sentinel posts,
2 sentinel comments, 1 comment on a missing post, 1 reply to that comment,
and 1 reply to a sentinel comment. Output is deterministic.
"""
import json
import random
from pathlib import Path

rng = random.Random(20240917)

POST_TOPICS = {
    "anime": [
        ("5-day Japan itinerary for an anime fan, feedback?",
         "First trip to Japan and I am a huge anime fan. I want to spend time in Akihabara, "
         "visit the Studio Ghibli Museum and maybe Ikebukuro. Is five days enough for the anime spots?"),
        ("Anime pilgrimage spots worth visiting in Tokyo",
         "Looking for real-life anime locations. I loved Your Name and want to see the Suga Shrine "
         "stairs. Which anime pilgrimage spots are easy to reach from Shinjuku?"),
        ("How to get Ghibli Museum tickets as a foreigner",
         "The Ghibli Museum tickets sell out fast. How do foreign tourists book Studio Ghibli Museum "
         "tickets and how early should I try?"),
        ("Themed cafes in Akihabara: which ones are good?",
         "I want to try an anime themed cafe in Akihabara. Maid cafe or Pokemon Cafe or a collab cafe? "
         "Which themed cafes are worth the queue?"),
        ("Nakano Broadway vs Akihabara for anime figures",
         "Collecting anime figures and manga. Is Nakano Broadway better than Akihabara for used figures "
         "and retro anime goods?"),
    ],
    "hotel": [
        ("Where to stay in Tokyo for 5 days?",
         "Trying to pick a hotel area in Tokyo. Shinjuku, Shibuya or Ueno? I want a downtown hotel near "
         "a train station for a 5-day trip."),
        ("Business hotel or ryokan for a short trip?",
         "Is a ryokan worth it for one night or should I stay in a business hotel the whole time? "
         "Budget is moderate and I care about location."),
        ("Capsule hotel experience for solo travelers",
         "Thinking about a capsule hotel in Tokyo to save money. How is the capsule hotel experience "
         "for solo travelers with luggage?"),
    ],
    "budget": [
        ("Is the JR Pass still worth it after the price increase?",
         "Planning Tokyo plus Kyoto in 5 days. Is the JR Pass still worth it or should I just buy "
         "shinkansen tickets and use a Suica card?"),
        ("Daily budget for Japan as a student",
         "I am a university student on a tight budget. How much per day for food, transport and a "
         "cheap hostel in Tokyo?"),
        ("Saving money on food in Japan",
         "Any tips for cheap eats? I heard konbini meals and gyudon chains are good for a budget trip."),
    ],
    "food": [
        ("Best ramen in Tokyo that is not a tourist trap",
         "I want to eat great ramen in Tokyo. Which ramen shops do locals like, and is Ichiran "
         "worth the queue?"),
        ("Food tour ideas for Osaka and Tokyo",
         "Foodie here. Planning a food tour with sushi, izakaya and street food in Dotonbori. "
         "Recommendations for a food itinerary?"),
    ],
    "itinerary": [
        ("Is a Kyoto day trip from Tokyo too rushed?",
         "With only 5 days, is a Kyoto day trip by shinkansen too rushed? I want temples and "
         "Fushimi Inari but also time in Tokyo."),
        ("First time in Japan, 5 days, how to pace the itinerary",
         "Five days in Japan for the first time. How do I pace the itinerary so I am not exhausted? "
         "Tokyo only or Tokyo plus Kyoto?"),
    ],
}

COMMENT_BANK = {
    "anime": [
        "Akihabara is a must for anime fans, go on a weekend when the main street is pedestrian only.",
        "Book the Studio Ghibli Museum tickets on the 10th of the previous month, they sell out in minutes.",
        "Nakano Broadway has better prices on used anime figures than Akihabara and fewer tourists.",
        "For anime pilgrimage spots, the Suga Shrine stairs from Your Name are a short walk from Yotsuya station.",
        "Ikebukuro and Otome Road are great for anime merchandise and the Pokemon Center Mega Tokyo.",
        "The themed cafes in Akihabara are fun once, the Pokemon Cafe needs a reservation weeks ahead.",
        "Spend a full day on anime spots: Akihabara in the morning, Nakano Broadway after lunch, Ikebukuro at night.",
    ],
    "filmmaker": [
        "As someone who makes short animated films, I plan shots around real anime locations and visual storytelling.",
        "I study the Japanese animation industry; visiting the studios area in Suginami shows how anime is made.",
        "For filming anime-style footage, golden hour at the Suga Shrine stairs gives the Shinkai look.",
        "As an animation student I recommend the Suginami Animation Museum, it explains anime production step by step.",
        "I shoot travel videos in anime style, and night scenes in Shinjuku and Akihabara look like animation backgrounds.",
        "Bring a small camera: anime locations like the Kamakura railway crossing are perfect for visual storytelling.",
    ],
    "hotel": [
        "Stay in Shinjuku, the station connects everywhere and business hotels there are clean and affordable.",
        "A downtown hotel near Ueno station is cheaper than Shinjuku and has direct trains to the airport.",
        "Do one night in a ryokan with an onsen, then a business hotel for the rest of the trip.",
        "Capsule hotels are fine for one or two nights but storing luggage is annoying.",
        "Pick a hotel within five minutes of a JR station, location matters more than room size in Tokyo.",
        "Business hotels like APA or Dormy Inn are small but clean, Dormy Inn even has a public bath.",
    ],
    "budget": [
        "The JR Pass is no longer worth it for Tokyo plus Kyoto only, buy single shinkansen tickets instead.",
        "Get a Suica card on your phone, it works on every train, bus and in konbini.",
        "Budget around 8000 yen per day for food and transport if you eat konbini breakfasts and gyudon.",
        "Konbini meals are cheap and surprisingly good, onigiri and egg sandwiches save a lot of money.",
        "Hostels in Asakusa cost about 3000 yen a night, a good option for a student budget.",
        "Skip taxis, the trains are cheaper and faster; a day of trains costs less than 1000 yen.",
    ],
    "food": [
        "Ichiran ramen is fine but the queue is long, try Fuunji for tsukemen or Afuri for yuzu ramen.",
        "Do a food tour in Dotonbori: takoyaki, okonomiyaki and kushikatsu are all worth it.",
        "Izakaya in Omoide Yokocho are tiny and fun, order yakitori and a highball.",
        "Conveyor belt sushi is cheap and good, Standing sushi bars near Tsukiji are even better.",
        "For ramen, avoid the tourist spots and look for shops with ticket machines and locals queueing.",
    ],
    "itinerary": [
        "A Kyoto day trip is doable but rushed, go early to Fushimi Inari and be back in Tokyo by night.",
        "Five days is short, I would stay in Tokyo only and do a day trip to Kamakura or Nikko.",
        "Pace the itinerary with one big area per day so you are not exhausted by day three.",
        "If you add Kyoto, spend two nights there instead of a day trip, the temples deserve time.",
        "Plan rest time in the afternoon, jet lag hits hard on day two of a 5-day itinerary.",
    ],
}

TOPIC_WEIGHTS = ["anime"] * 3 + ["filmmaker"] * 2 + ["hotel"] * 2 + ["budget"] * 2 + ["food", "itinerary"]
POST_TOPIC_FOR_COMMENT = {"anime": "anime", "filmmaker": "anime", "hotel": "hotel",
                          "budget": "budget", "food": "food", "itinerary": "itinerary"}

OPENERS = ["", "Honestly, ", "From my trip last year: ", "Local here. ", "Agree with the others. ",
           "My two cents: ", "Just got back! "]
CLOSERS = ["", " Have a great trip!", " Enjoy Japan.", " Hope this helps.", " Worth it.",
           " That worked well for us."]


def author():
    return "u_%08x" % rng.getrandbits(32)


def main():
    records = []
    t0 = 1700000000
    posts = []
    topics = list(POST_TOPICS)
    for i in range(47):
        topic = topics[i % len(topics)]
        title, body = POST_TOPICS[topic][(i // len(topics)) % len(POST_TOPICS[topic])]
        if i >= len(topics) * 2:
            body = body + " " + rng.choice([
                "Any advice appreciated.", "Traveling in spring.", "Going with a friend.",
                "It is my first time abroad.", "Thanks in advance!", "Traveling in late autumn."])
        pid = "jt%03d" % i
        posts.append((pid, topic))
        records.append({"kind": "post", "id": pid, "subreddit": "JapanTravel", "title": title,
                        "selftext": body, "author": author(), "created_utc": t0 + i * 5400 + rng.randint(0, 900),
                        "score": rng.randint(0, 250)})
    # Sentinel posts.
    records.append({"kind": "post", "id": "jt900", "subreddit": "JapanTravel", "title": "Help with my trip",
                    "selftext": "[removed]", "author": author(), "created_utc": t0 + 1000, "score": 0})
    records.append({"kind": "post", "id": "jt901", "subreddit": "JapanTravel", "title": "Question about Kyoto",
                    "selftext": "[removed]", "author": author(), "created_utc": t0 + 2000, "score": 1})
    records.append({"kind": "post", "id": "[deleted]", "subreddit": "JapanTravel", "title": "Tokyo hotels",
                    "selftext": "Where to stay?", "author": author(), "created_utc": t0 + 3000, "score": 2})

    comments = []
    n_regular = 200 - 5
    for j in range(n_regular):
        ctopic = TOPIC_WEIGHTS[j % len(TOPIC_WEIGHTS)]
        want = POST_TOPIC_FOR_COMMENT[ctopic]
        candidates = [p for p, t in posts if t == want]
        pid = candidates[rng.randrange(len(candidates))]
        text = rng.choice(OPENERS) + rng.choice(COMMENT_BANK[ctopic]) + rng.choice(CLOSERS)
        cid = "c%04d" % j
        parent = "t3_" + pid
        siblings = [c for c in comments if c["link_id"] == "t3_" + pid]
        if siblings and rng.random() < 0.3:
            parent = "t1_" + rng.choice(siblings)["id"]
        comments.append({"kind": "comment", "id": cid, "link_id": "t3_" + pid, "parent_id": parent,
                         "body": text, "author": author(),
                         "created_utc": t0 + 200000 + j * 600 + rng.randint(0, 300),
                         "score": rng.randint(-2, 80)})
    anchor_post = posts[0][0]
    comments.append({"kind": "comment", "id": "c9000", "link_id": "t3_" + anchor_post,
                     "parent_id": "t3_" + anchor_post, "body": "[deleted]", "author": "[deleted]",
                     "created_utc": t0 + 400000, "score": 0})
    comments.append({"kind": "comment", "id": "c9001", "link_id": "t3_" + anchor_post,
                     "parent_id": "t3_" + anchor_post, "body": "[removed]", "author": author(),
                     "created_utc": t0 + 400100, "score": 0})
    comments.append({"kind": "comment", "id": "c9002", "link_id": "t3_zz_missing",
                     "parent_id": "t3_zz_missing", "body": "This thread was about Osaka castle.",
                     "author": author(), "created_utc": t0 + 400200, "score": 3})
    comments.append({"kind": "comment", "id": "c9003", "link_id": "t3_zz_missing",
                     "parent_id": "t1_c9002", "body": "Osaka castle park is lovely in spring.",
                     "author": author(), "created_utc": t0 + 400300, "score": 1})
    comments.append({"kind": "comment", "id": "c9004", "link_id": "t3_" + anchor_post,
                     "parent_id": "t1_c9000", "body": "Replying to a comment that was deleted.",
                     "author": author(), "created_utc": t0 + 400400, "score": 1})

    order = list(range(len(comments)))
    rng.shuffle(order)
    records.extend(comments[k] for k in order)

    out = Path(__file__).with_name("japantravel_mini.jsonl")
    with out.open("w", encoding="utf-8") as f:
        for r in records:
            f.write(json.dumps(r, ensure_ascii=False) + "\n")


if __name__ == "__main__":
    main()
