import collections

from django.urls import reverse


Link = collections.namedtuple('Link', 'target rel')


def get_link_header(links):
    """ Returns the value for a Link header (RFC 5988)

    https://tools.ietf.org/html/rfc5988 """
    return ', '.join(get_link(link) for link in links)


def get_link(link):
    """ Format one link for a HTTP Link header

    >>> get_link(Link('/experiments/?page=2', ['next', 'last']))
    '</experiments/?page=2>; rel="next last"'

    >>> get_link(Link('/experiments/?page=1', 'prev'))
    '</experiments/?page=1>; rel="prev"'
    """

    if isinstance(link.rel, list):
        rels = ' '.join(link.rel)
    else:
        rels = link.rel
    return '<{target}>; rel="{rels}"'.format(target=link.target, rels=rels)


def page_links(viewname, page):
    """ next / prev links of a django.core.paginator.Page """
    url = reverse(viewname)
    links = []
    if page.has_next():
        links.append(
            Link('{url}?page={n}'.format(url=url, n=page.next_page_number()),
                 'next')
        )
    if page.has_previous():
        links.append(
            Link('{url}?page={n}'.format(
                url=url, n=page.previous_page_number()
            ), 'prev')
        )
    return links
